#include "dds/waveform.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "dds/fft.hpp"

namespace dds {

std::vector<Complex> zadoff_chu(int root, int length) {
  if (length < 1) throw DomainError("Zadoff-Chu length must be >= 1");
  if (std::gcd(root, length) != 1) throw DomainError("Zadoff-Chu root must be coprime to the length");

  std::vector<Complex> seq(static_cast<std::size_t>(length));
  const bool odd = (length % 2) == 1;
  for (int n = 0; n < length; ++n) {
    // Reduce the quadratic index modulo 2L before scaling to keep the phase
    // argument small for long sequences.
    const long long q = odd ? static_cast<long long>(n) * (n + 1) : static_cast<long long>(n) * n;
    const long long r = (static_cast<long long>(root) % (2LL * length) * (q % (2LL * length))) % (2LL * length);
    seq[static_cast<std::size_t>(n)] = std::polar(1.0, -kPi * static_cast<double>(r) / length);
  }
  return seq;
}

TonePlan make_tone_plan(const SounderConfig& cfg, int tx_index, int zc_root) {
  if (tx_index < 0 || tx_index >= cfg.tx_count) throw ConfigError("tx_index outside 0..tx_count-1");
  TonePlan plan;
  plan.tx_index = tx_index;
  plan.tone_weights = zadoff_chu(zc_root, cfg.tone_count);
  plan.tone_frequencies_hz.resize(static_cast<std::size_t>(cfg.tone_count));
  const double centre = 0.5 * (cfg.tone_count - 1);
  for (int k = 0; k < cfg.tone_count; ++k) {
    plan.tone_frequencies_hz[static_cast<std::size_t>(k)] =
        (k - centre) * cfg.tone_spacing_hz + tx_index * cfg.tx_tone_offset_hz;
  }
  return plan;
}

std::vector<int> tone_bins(const SounderConfig& cfg, const TonePlan& plan) {
  const int L = cfg.samples_per_period();
  const double period = static_cast<double>(L) / cfg.sample_rate_hz;
  std::vector<int> bins;
  bins.reserve(plan.tone_frequencies_hz.size());
  for (double f : plan.tone_frequencies_hz) {
    const double b = f * period;
    if (std::abs(b - std::round(b)) > 1e-6) {
      throw ConfigError("tone at " + std::to_string(f) + " Hz is not on the 1/T grid of the period");
    }
    bins.push_back(static_cast<int>(((std::lround(b) % L) + L) % L));
  }
  return bins;
}

std::vector<int> unoccupied_bins(const SounderConfig& cfg) {
  const int L = cfg.samples_per_period();
  std::set<long> occupied;
  long lo = 0, hi = 0;
  bool first = true;
  const double period = static_cast<double>(L) / cfg.sample_rate_hz;
  for (int tx = 0; tx < cfg.tx_count; ++tx) {
    const TonePlan plan = make_tone_plan(cfg, tx);
    for (double f : plan.tone_frequencies_hz) {
      const long b = std::lround(f * period);
      occupied.insert(b);
      lo = first ? b : std::min(lo, b);
      hi = first ? b : std::max(hi, b);
      first = false;
    }
  }
  std::vector<int> free;
  for (long b = lo; b <= hi; ++b) {
    if (!occupied.contains(b)) free.push_back(static_cast<int>(((b % L) + L) % L));
  }
  return free;
}

SampledSignal multitone_waveform(const SounderConfig& cfg, const TonePlan& plan) {
  const double samples = cfg.sequence_period_s * cfg.sample_rate_hz;
  if (std::abs(samples - std::round(samples)) > 1e-6) {
    throw ConfigError("samples per period is not an integer");
  }
  if (plan.tone_frequencies_hz.size() != plan.tone_weights.size()) {
    throw ConfigError("tone plan frequency and weight counts differ");
  }
  for (double f : plan.tone_frequencies_hz) {
    if (cfg.sample_rate_hz < 2.0 * std::abs(f)) throw ConfigError("sample rate below twice the highest tone");
  }
  const int L = static_cast<int>(std::lround(samples));
  const std::vector<int> bins = tone_bins(cfg, plan);

  // Tones sit exactly on the DFT grid, so an inverse DFT of the weighted comb
  // is the tone sum evaluated at n / fs.
  std::vector<Complex> spectrum(static_cast<std::size_t>(L), Complex{});
  for (std::size_t k = 0; k < bins.size(); ++k) spectrum[static_cast<std::size_t>(bins[k])] += plan.tone_weights[k];

  SampledSignal sig;
  sig.sample_rate_hz = cfg.sample_rate_hz;
  sig.samples.resize(static_cast<std::size_t>(L));
  fft::backward(spectrum, sig.samples);
  return sig;
}

double crest_factor(const SampledSignal& sig) {
  if (sig.samples.empty()) throw DomainError("crest factor of an empty signal");
  double peak = 0.0, energy = 0.0;
  for (const auto& s : sig.samples) {
    peak = std::max(peak, std::abs(s));
    energy += std::norm(s);
  }
  if (energy == 0.0) throw DomainError("crest factor of an all-zero signal");
  return peak / std::sqrt(energy / static_cast<double>(sig.samples.size()));
}

SampledSignal repeat_periods(const SampledSignal& sig, int count) {
  SampledSignal out;
  out.sample_rate_hz = sig.sample_rate_hz;
  out.t0_s = sig.t0_s;
  out.samples.reserve(sig.samples.size() * static_cast<std::size_t>(std::max(count, 0)));
  for (int i = 0; i < count; ++i) out.samples.insert(out.samples.end(), sig.samples.begin(), sig.samples.end());
  return out;
}

}  // namespace dds
