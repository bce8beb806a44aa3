#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dds/config_file.hpp"
#include "dds/rxproc.hpp"
#include "dds/sbl.hpp"
#include "dds/tfanalysis.hpp"

namespace dds {

struct SimulationOutput {
  SampledSignal rx;
  SampledSignal standstill;
};

/// TX waveforms of every TX, one period each.
std::vector<SampledSignal> tx_waveforms(const SounderConfig& cfg);

/// Drive-by capture plus the standstill calibration record.
SimulationOutput simulate(const ScenarioFile& sf, const SounderConfig& cfg, std::uint64_t seed,
                          Execution exec = Execution::Parallel);

/// Ground truth per snapshot of the capture: one row per visible path and TX.
std::string truth_csv(const ScenarioConfig& sc, const SounderConfig& cfg, std::uint64_t seed);

struct ProcessOutput {
  double cfo_hz = 0.0;
  std::vector<TransferFunctionGrid> H;   // per TX, LOS aligned
  std::vector<std::vector<double>> snr_db;  // per TX, per snapshot
};

/// CFO from the standstill record, then averaging, demux, alignment and SNR
/// for every TX.
ProcessOutput process(const SampledSignal& rx, const SampledSignal& standstill, const ScenarioConfig& sc,
                      const SounderConfig& cfg, Execution exec = Execution::Parallel);

struct WindowAnalysis {
  int tx_index = 0;
  int window = 0;
  double start_s = 0.0;
  double median_snr_db = 0.0;
  RealGrid lsf;               // sums to one
  std::vector<double> dsd;    // of the normalized LSF
  PeakList lsf_peaks;
  SBLResult sbl;              // gamma and noise_var in |H|^2 units
  PeakList sbl_peaks;         // active peaks with gamma >= threshold * noise_var
};

/// Non-overlapping windows of cfg.lsf.window_length snapshots, at most
/// `max_windows` of them (0: all). Windows run concurrently.
std::vector<WindowAnalysis> analyze(const TransferFunctionGrid& H, std::span<const double> snr_db,
                                    const RunConfig& cfg, int max_windows, Execution exec = Execution::Parallel);

/// LSF + SBL of a single K x M window. The window is scaled to unit mean power
/// before the SBL fit and gamma / noise_var are scaled back afterwards.
WindowAnalysis analyze_window(const Eigen::MatrixXcd& window, const RunConfig& cfg, const GridAxes& axes,
                              Execution exec = Execution::Parallel);

/// Axes of the native grid for `cfg`.
GridAxes native_axes(const SounderConfig& cfg, double window_start_s = 0.0);

}  // namespace dds
