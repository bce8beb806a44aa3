#pragma once

#include <Eigen/Core>
#include <vector>

#include "dds/channel.hpp"
#include "dds/rxproc.hpp"

namespace dds {

/// Grid over (delay, Doppler): rows are delay bins starting at zero delay,
/// columns are Doppler bins m in [-M/2, M/2) from left to right.
template <typename T>
struct DelayDopplerGrid {
  Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic> values;
  std::vector<double> delay_axis_s;
  std::vector<double> doppler_axis_hz;
  double window_start_s = 0.0;

  [[nodiscard]] int delay_bins() const { return static_cast<int>(values.rows()); }
  [[nodiscard]] int doppler_bins() const { return static_cast<int>(values.cols()); }
};

using ComplexGrid = DelayDopplerGrid<Complex>;
using RealGrid = DelayDopplerGrid<double>;

/// Physical spacing of the native grid.
struct GridAxes {
  double tone_spacing_hz = 0.0;   // delay bin = 1 / (U K df)
  double snapshot_time_s = 0.0;   // Doppler bin = 1 / (M T_snap)
  int delay_upsampling = 1;
  double window_start_s = 0.0;
};

std::vector<double> delay_axis(int K, const GridAxes& axes);
std::vector<double> doppler_axis(int M, const GridAxes& axes);

/// Signed Doppler index of centred column c: c - M/2.
inline int doppler_index(int column, int M) { return column - M / 2; }

// Unitary DFT matrix F[k, n] = exp(-j 2 pi k n / N) / sqrt(N).
Eigen::MatrixXcd dft_matrix(int N);

/// S = F_K^H H F_M (K tones x M snapshots in, delay x Doppler out), without
/// centring the Doppler axis.
Eigen::MatrixXcd sfft_raw(const Eigen::MatrixXcd& H);
/// H = F_K S F_M^H.
Eigen::MatrixXcd isfft_raw(const Eigen::MatrixXcd& S);

/// Circular shift of the Doppler (column) axis between raw order [0, M) and
/// centred order [-M/2, M/2).
Eigen::MatrixXcd center_doppler(const Eigen::MatrixXcd& raw);
Eigen::MatrixXcd uncenter_doppler(const Eigen::MatrixXcd& centred);

/// sfft with a centred Doppler axis. Throws ShapeError on an empty window.
ComplexGrid sfft(const Eigen::MatrixXcd& H, const GridAxes& axes);
Eigen::MatrixXcd isfft(const ComplexGrid& S);

/// Leading `count` discrete prolate spheroidal sequences (columns), sorted by
/// concentration, each with a positive sum (odd tapers: positive first lobe).
/// Throws DomainError if count > 2 NW or length < count.
Eigen::MatrixXd dpss_tapers(int length, double nw, int count);

struct LSFConfig {
  int window_length = 360;  // M snapshots
  int tone_count = 21;      // K
  int tapers_time = 3;      // I
  int tapers_freq = 3;      // J
  double nw = 2.0;
};

/// Multitaper LSF = 1/(IJ) sum_{i,j} |sfft(H o u_j u_i^T)|^2, Doppler centred.
/// Throws ShapeError if H is not K x M per `cfg`.
RealGrid lsf_estimate(const Eigen::MatrixXcd& H, const LSFConfig& cfg, const GridAxes& axes,
                      Execution exec = Execution::Parallel);

/// Delay marginal of a grid, one value per Doppler column.
std::vector<double> dsd(const RealGrid& lsf);

/// Scale so the grid sums to one (all-zero grids are returned unchanged).
RealGrid normalized(const RealGrid& grid);

struct Peak {
  int delay_bin = 0;
  int doppler_bin = 0;  // signed index m
  double delay_s = 0.0;
  double doppler_hz = 0.0;
  double power = 0.0;
};
using PeakList = std::vector<Peak>;

/// Strict local maxima over circular 8-neighbourhoods, largest first, at most
/// P of them. Equal values order by smaller delay, then smaller |Doppler|.
PeakList top_peaks_2d(const RealGrid& grid, int P);

/// K x M window of H (tones x snapshots) starting at snapshot `first`.
/// Throws ShapeError if the window runs past the grid.
Eigen::MatrixXcd extract_window(const TransferFunctionGrid& H, int first, int M);

}  // namespace dds
