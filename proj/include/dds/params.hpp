#pragma once

#include <map>
#include <string>
#include <vector>

namespace dds {

/// Sounder design: tone plan, timing, speeds. Units are SI throughout.
struct SounderConfig {
  double center_frequency_hz = 0.0;
  double tone_spacing_hz = 0.0;     // spacing of one TX's tones
  int tone_count = 0;               // tones per TX
  int tx_count = 0;
  double tx_tone_offset_hz = 0.0;   // comb offset between consecutive TXs
  double bandwidth_hz = 0.0;
  double max_excess_delay_s = 0.0;
  double sequence_period_s = 0.0;   // one period of the multitone sequence
  int averaging_count = 0;          // periods averaged per snapshot
  double snapshot_time_s = 0.0;
  double max_speed_mps = 0.0;
  double max_doppler_hz = 0.0;      // design value used for the snapshot bound
  double recording_time_s = 0.0;
  double sample_rate_hz = 0.0;
  int snapshot_count = 0;

  /// Samples in one sequence period (rounded; validate_config checks it is integral).
  [[nodiscard]] int samples_per_period() const;
  [[nodiscard]] int samples_per_snapshot() const { return samples_per_period() * averaging_count; }
};

/// The reference 60 GHz sounder parameters (125 MS/s, 105-sample period).
SounderConfig reference_config();

struct ValidationCheck {
  std::string name;
  bool pass = false;
  double value = 0.0;
  double bound = 0.0;
  std::string relation;  // how value relates to bound, e.g. "<=" or "=="
};

struct ValidationReport {
  std::vector<ValidationCheck> checks;
  std::map<std::string, double> derived;

  [[nodiscard]] bool pass() const;
  [[nodiscard]] const ValidationCheck& check(const std::string& name) const;
  /// One line per check: name, value, bound, PASS/FAIL; then derived values.
  [[nodiscard]] std::string to_text() const;
};

/// Checks every sampling/budget constraint of a sounder design.
/// Throws ConfigError naming the first non-positive field.
ValidationReport validate_config(const SounderConfig& cfg);

/// 10 log10(N) in dB. Throws DomainError for N < 1.
double processing_gain_db(int averaging_count);

/// Free-space path loss 20 log10(4 pi d fc / c) in dB.
double free_space_path_loss_db(double distance_m, double center_frequency_hz);

/// Maximum Doppler shift speed * fc / c.
double max_doppler_hz(double speed_mps, double center_frequency_hz);

}  // namespace dds
