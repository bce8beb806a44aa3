#pragma once

#include <vector>

#include "dds/common.hpp"
#include "dds/params.hpp"

namespace dds {

/// Uniformly sampled complex baseband sequence.
struct SampledSignal {
  std::vector<Complex> samples;
  double sample_rate_hz = 0.0;
  double t0_s = 0.0;  // epoch of samples[0]

  [[nodiscard]] std::size_t size() const { return samples.size(); }
  [[nodiscard]] double time_of(std::size_t n) const {
    return t0_s + static_cast<double>(n) / sample_rate_hz;
  }
};

/// Tones of one transmitter: an arithmetic progression with step tone_spacing,
/// offset by tx_index * tx_tone_offset from TX 0, unit-magnitude weights.
struct TonePlan {
  int tx_index = 0;
  std::vector<double> tone_frequencies_hz;
  std::vector<Complex> tone_weights;
};

/// Zadoff-Chu sequence exp(-j pi r n (n + 1) / L) for odd L, exp(-j pi r n^2 / L)
/// for even L. Throws DomainError unless gcd(root, length) == 1.
std::vector<Complex> zadoff_chu(int root, int length);

/// Tone plan of TX `tx_index`: K tones centred on DC (TX 0), shifted by
/// tx_index * f_delta, weighted by ZC(root, K).
TonePlan make_tone_plan(const SounderConfig& cfg, int tx_index, int zc_root = 1);

/// DFT bin (0..L-1) of every tone of `plan` on the 1/T grid of one period.
/// Throws ConfigError if a tone is off the grid.
std::vector<int> tone_bins(const SounderConfig& cfg, const TonePlan& plan);

/// Bins inside the span of all TX combs that no TX occupies. These carry only
/// noise and are used for SNR estimation.
std::vector<int> unoccupied_bins(const SounderConfig& cfg);

/// One period (T * sample_rate samples) of sum_k w_k exp(j 2 pi f_k t).
SampledSignal multitone_waveform(const SounderConfig& cfg, const TonePlan& plan);

/// Peak-to-RMS amplitude ratio. Throws DomainError for an all-zero signal.
double crest_factor(const SampledSignal& sig);

/// `sig` concatenated `count` times.
SampledSignal repeat_periods(const SampledSignal& sig, int count);

}  // namespace dds
