#pragma once

#include <Eigen/Core>
#include <vector>

#include "dds/tfanalysis.hpp"

namespace dds {

/// Dictionary A = F_M^H (x) F~_K of the delay-Doppler sparse model, with
/// F~_K[k, n] = exp(-j 2 pi k n / (U K)) / sqrt(K). Every column has unit norm.
/// Coefficient grids are (U K) x M in raw Doppler order; column-major vec()
/// matches the Kronecker ordering. With U = 1 the forward map is isfft_raw.
class SparseModel {
 public:
  SparseModel(int K, int M, int U);

  [[nodiscard]] int tones() const { return K_; }
  [[nodiscard]] int snapshots() const { return M_; }
  [[nodiscard]] int upsampling() const { return U_; }
  [[nodiscard]] int delay_bins() const { return U_ * K_; }

  /// s (UK x M) -> H (K x M).
  [[nodiscard]] Eigen::MatrixXcd forward(const Eigen::MatrixXcd& s) const;
  /// H (K x M) -> A^H vec(H), reshaped to UK x M.
  [[nodiscard]] Eigen::MatrixXcd adjoint(const Eigen::MatrixXcd& H) const;
  /// Explicit KM x UKM matrix. Small sizes only.
  [[nodiscard]] Eigen::MatrixXcd dense_matrix() const;
  /// F~_K (K x UK).
  [[nodiscard]] const Eigen::MatrixXcd& delay_dictionary() const { return Fk_; }

 private:
  int K_, M_, U_;
  Eigen::MatrixXcd Fk_;
};

SparseModel build_model(int K, int M, int U);

struct SBLConfig {
  int P = 10;           // active-set size
  int iterations = 10;
  double gamma_init = 1.0;
  double noise_var_init = 0.1;
  int U = 4;
};

struct SBLResult {
  RealGrid gamma;                 // U K x M, Doppler centred
  double noise_var = 0.0;
  PeakList active_peaks;          // 2D peaks of gamma, at most P
  double converged_delta = 0.0;   // ||gamma_last - gamma_prev|| / ||gamma_prev||
  Eigen::MatrixXcd mean;          // posterior mean of s, raw Doppler order
  std::vector<double> residual_history;  // ||h - P_A h|| per iteration
};

/// Single-snapshot SBL fixed point with 2D top-P active-set noise update.
/// Sigma_y is block diagonal after a DFT over time, so each iteration solves M
/// independent K x K systems. Throws ShapeError if H is not K x M for `model`,
/// NumericalError on non-finite input, DomainError if K M <= |A|.
SBLResult sbl_fit(const Eigen::MatrixXcd& H, const SparseModel& model, const SBLConfig& cfg, const GridAxes& axes,
                  Execution exec = Execution::Parallel);

/// Same iteration with a dense K M x K M covariance. Slow; small sizes only.
SBLResult sbl_fit_dense(const Eigen::MatrixXcd& H, const SparseModel& model, const SBLConfig& cfg,
                        const GridAxes& axes);

/// 2D peak selection on the gamma grid (same rule as top_peaks_2d).
PeakList peak_select_2d(const RealGrid& gamma, int P);

}  // namespace dds
