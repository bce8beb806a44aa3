#include "dds/params.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "dds/common.hpp"

namespace dds {
namespace {

// Relative slack for bounds that the reference design meets with equality
// (e.g. K * df == B, df == 1 / (2 tau_max)).
constexpr double kRelSlack = 1e-9;

bool leq(double value, double bound) { return value <= bound * (1.0 + kRelSlack); }

bool near(double a, double b) { return std::abs(a - b) <= kRelSlack * std::max(std::abs(a), std::abs(b)); }

bool near_integer(double x) { return std::abs(x - std::round(x)) <= 1e-6; }

void require_positive(double v, const char* field) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw ConfigError(std::string("invalid config: field '") + field + "' must be positive");
  }
}

}  // namespace

int SounderConfig::samples_per_period() const {
  return static_cast<int>(std::lround(sequence_period_s * sample_rate_hz));
}

SounderConfig reference_config() {
  SounderConfig cfg;
  cfg.sample_rate_hz = 125e6;
  cfg.sequence_period_s = 105.0 / cfg.sample_rate_hz;  // 840 ns
  cfg.center_frequency_hz = 60.15e9;
  cfg.tx_tone_offset_hz = 1.0 / cfg.sequence_period_s;  // 1.19 MHz
  cfg.tone_spacing_hz = 4.0 / cfg.sequence_period_s;    // 4.76 MHz
  cfg.tone_count = 21;
  cfg.tx_count = 2;
  cfg.bandwidth_hz = 100e6;
  cfg.max_excess_delay_s = 105e-9;
  cfg.averaging_count = 212;
  cfg.snapshot_time_s = cfg.averaging_count * cfg.sequence_period_s;
  cfg.max_speed_mps = 14.0;
  cfg.max_doppler_hz = 2800.0;
  cfg.recording_time_s = 3.6;
  cfg.snapshot_count = 20275;
  return cfg;
}

bool ValidationReport::pass() const {
  for (const auto& c : checks) {
    if (!c.pass) return false;
  }
  return true;
}

const ValidationCheck& ValidationReport::check(const std::string& name) const {
  for (const auto& c : checks) {
    if (c.name == name) return c;
  }
  throw std::out_of_range("no validation check named '" + name + "'");
}

std::string ValidationReport::to_text() const {
  std::ostringstream os;
  char line[256];
  for (const auto& c : checks) {
    std::snprintf(line, sizeof line, "%-18s value=%.9g %s bound=%.9g %s\n", c.name.c_str(), c.value,
                  c.relation.c_str(), c.bound, c.pass ? "PASS" : "FAIL");
    os << line;
  }
  for (const auto& [key, value] : derived) {
    std::snprintf(line, sizeof line, "derived %-26s %.9g\n", key.c_str(), value);
    os << line;
  }
  os << "overall " << (pass() ? "PASS" : "FAIL") << '\n';
  return os.str();
}

ValidationReport validate_config(const SounderConfig& cfg) {
  require_positive(cfg.center_frequency_hz, "center_frequency_hz");
  require_positive(cfg.tone_spacing_hz, "tone_spacing_hz");
  require_positive(cfg.tone_count, "tone_count");
  require_positive(cfg.tx_count, "tx_count");
  require_positive(cfg.tx_tone_offset_hz, "tx_tone_offset_hz");
  require_positive(cfg.bandwidth_hz, "bandwidth_hz");
  require_positive(cfg.max_excess_delay_s, "max_excess_delay_s");
  require_positive(cfg.sequence_period_s, "sequence_period_s");
  require_positive(cfg.averaging_count, "averaging_count");
  require_positive(cfg.snapshot_time_s, "snapshot_time_s");
  require_positive(cfg.max_speed_mps, "max_speed_mps");
  require_positive(cfg.max_doppler_hz, "max_doppler_hz");
  require_positive(cfg.recording_time_s, "recording_time_s");
  require_positive(cfg.sample_rate_hz, "sample_rate_hz");
  require_positive(cfg.snapshot_count, "snapshot_count");

  ValidationReport r;
  auto add = [&r](std::string name, bool pass, double value, double bound, std::string rel) {
    r.checks.push_back({std::move(name), pass, value, bound, std::move(rel)});
  };

  const double delay_bound = 1.0 / (2.0 * cfg.max_excess_delay_s);
  add("delay_sampling", leq(cfg.tone_spacing_hz, delay_bound), cfg.tone_spacing_hz, delay_bound, "<=");

  const double snap_bound = 1.0 / (2.0 * cfg.max_doppler_hz);
  add("doppler_sampling", leq(cfg.snapshot_time_s, snap_bound), cfg.snapshot_time_s, snap_bound, "<=");

  const double comb_period = 1.0 / cfg.tx_tone_offset_hz;
  add("comb_period", near(cfg.sequence_period_s, comb_period), cfg.sequence_period_s, comb_period, "==");

  const double snap_expected = cfg.averaging_count * cfg.sequence_period_s;
  add("snapshot_time", near(cfg.snapshot_time_s, snap_expected), cfg.snapshot_time_s, snap_expected, "==");

  const double occupied = cfg.tone_count * cfg.tone_spacing_hz;
  add("bandwidth", leq(occupied, cfg.bandwidth_hz), occupied, cfg.bandwidth_hz, "<=");

  // TX combs interleave on the f_delta grid: df must be an integer multiple of
  // f_delta with room for every TX.
  const double slots = cfg.tone_spacing_hz / cfg.tx_tone_offset_hz;
  add("fdm_interleave", near_integer(slots) && std::round(slots) >= cfg.tx_count, slots,
      static_cast<double>(cfg.tx_count), ">= (integer)");

  const double samples = cfg.sequence_period_s * cfg.sample_rate_hz;
  add("period_samples", near_integer(samples), samples, std::round(samples), "== (integer)");

  const double max_tone = 0.5 * (cfg.tone_count - 1) * cfg.tone_spacing_hz +
                          (cfg.tx_count - 1) * cfg.tx_tone_offset_hz;
  add("baseband_nyquist", cfg.sample_rate_hz > 2.0 * max_tone, cfg.sample_rate_hz, 2.0 * max_tone, ">");

  // The configured Q is compared with 1% tolerance; see README.
  const double q_computed = std::floor(cfg.recording_time_s / cfg.snapshot_time_s);
  add("snapshot_count", std::abs(cfg.snapshot_count - q_computed) <= 0.01 * q_computed,
      cfg.snapshot_count, q_computed, "~= (1%)");

  // The design Doppler may be a rounded figure (2800 Hz for 2809 Hz exact) but
  // has to cover the maximum speed to within 1%.
  const double nu_exact = max_doppler_hz(cfg.max_speed_mps, cfg.center_frequency_hz);
  add("doppler_design", cfg.max_doppler_hz >= 0.99 * nu_exact, cfg.max_doppler_hz, 0.99 * nu_exact, ">=");

  r.derived["processing_gain_db"] = processing_gain_db(cfg.averaging_count);
  r.derived["max_alias_free_delay_s"] = 1.0 / (2.0 * cfg.tone_spacing_hz);
  r.derived["snapshot_time_s"] = snap_expected;
  r.derived["snapshot_time_bound_s"] = snap_bound;
  r.derived["max_doppler_configured_hz"] = cfg.max_doppler_hz;
  r.derived["max_doppler_exact_hz"] = nu_exact;
  r.derived["max_doppler_rounding_rel"] = (cfg.max_doppler_hz - nu_exact) / nu_exact;
  r.derived["snapshot_count_computed"] = q_computed;
  r.derived["samples_per_period"] = samples;
  r.derived["delay_resolution_s"] = 1.0 / (cfg.tone_count * cfg.tone_spacing_hz);
  return r;
}

double processing_gain_db(int averaging_count) {
  if (averaging_count < 1) throw DomainError("processing gain requires N >= 1");
  return 10.0 * std::log10(static_cast<double>(averaging_count));
}

double free_space_path_loss_db(double distance_m, double center_frequency_hz) {
  if (!(distance_m > 0.0) || !(center_frequency_hz > 0.0)) {
    throw DomainError("free-space path loss requires positive distance and frequency");
  }
  return 20.0 * std::log10(4.0 * kPi * distance_m * center_frequency_hz / kSpeedOfLight);
}

double max_doppler_hz(double speed_mps, double center_frequency_hz) {
  if (speed_mps < 0.0) throw DomainError("speed must be non-negative");
  return speed_mps * center_frequency_hz / kSpeedOfLight;
}

}  // namespace dds
