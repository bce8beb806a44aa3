#pragma once

#include <Eigen/Core>
#include <span>
#include <vector>

#include "dds/channel.hpp"
#include "dds/params.hpp"
#include "dds/waveform.hpp"

namespace dds {

/// Coherently averaged sequence periods, one row per snapshot.
struct AveragedSnapshots {
  int tx_index = 0;
  Eigen::MatrixXcd periods;            // Q x L
  std::vector<double> snapshot_times_s;  // centre of each snapshot
  std::vector<double> doppler_hz;        // LOS offset estimate minus CFO
};

/// Time-variant transfer function H_i[t, f_i] of one TX.
struct TransferFunctionGrid {
  int tx_index = 0;
  Eigen::MatrixXcd values;               // Q snapshots x K tones
  std::vector<double> snapshot_times_s;  // uniform, centre of each snapshot
  std::vector<double> tone_frequencies_hz;
  std::vector<double> noise_power;       // per snapshot, in |H|^2 units
  std::vector<double> doppler_hz;        // per-snapshot LOS Doppler estimate

  [[nodiscard]] int snapshots() const { return static_cast<int>(values.rows()); }
  [[nodiscard]] int tones() const { return static_cast<int>(values.cols()); }
};

struct CfoSearch {
  double max_abs_hz = 0.0;        // 0: full unambiguous range +-1/(2T)
  double detection_ratio = 10.0;  // correlator peak / median required
};

/// CFO from a standstill record: maximizes the period-rate correlator
/// Z(f) = sum_k |sum_p X_p[k] conj(R[k]) exp(-j 2 pi f p T)|^2 over a zero-padded
/// FFT grid, then refines by repeated quadratic interpolation of the peak.
/// Throws NumericalError if the peak does not clear the detection threshold.
double estimate_cfo(const SampledSignal& rx_standstill, const SampledSignal& reference, const CfoSearch& search = {});

/// Per snapshot: estimate the LOS offset (Doppler + CFO) of TX `tx_index` with
/// the same correlator over one snapshot span, derotate, average the N
/// periods with a rectangular non-overlapping window, and restore the Doppler
/// part so that only the CFO is removed. Snapshots start at the record's
/// first sample. Throws ShapeError if the record is shorter than a snapshot.
AveragedSnapshots coherent_average(const SampledSignal& rx, const SounderConfig& cfg, double cfo_hz, int tx_index,
                                   Execution exec = Execution::Parallel);

/// Same, without LOS offset correction (plain averaging, CFO removal only at
/// snapshot centres). Used to quantify decorrelation.
AveragedSnapshots plain_average(const SampledSignal& rx, const SounderConfig& cfg, double cfo_hz, int tx_index);

/// DFT each averaged period, pick the plan's bins and divide by L * weight.
/// Noise power per snapshot comes from the comb's unoccupied bins.
TransferFunctionGrid demultiplex(const AveragedSnapshots& avg, const SounderConfig& cfg, const TonePlan& plan);

/// Advance every tone by the LOS delay at the trigger position, so the LOS
/// sits near zero delay.
TransferFunctionGrid align_los_delay(const TransferFunctionGrid& H, const ScenarioConfig& sc);

/// Per-snapshot SNR in dB: mean tone power over noise power.
/// Throws DomainError if a noise estimate is zero.
std::vector<double> snr_per_tx(const TransferFunctionGrid& H, std::span<const double> noise_power);

}  // namespace dds
