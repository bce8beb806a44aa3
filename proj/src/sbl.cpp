#include "dds/sbl.hpp"

#include <Eigen/Cholesky>
#include <Eigen/QR>
#include <cmath>

#include "dds/fft.hpp"

namespace dds {
namespace {

// Raw Doppler column of a peak's signed index.
int raw_column(int signed_bin, int M) { return ((signed_bin % M) + M) % M; }

RealGrid centred_grid(const Eigen::MatrixXd& raw, int K, const GridAxes& axes) {
  RealGrid g;
  g.values = center_doppler(raw.cast<Complex>()).real();
  GridAxes a = axes;
  g.delay_axis_s = delay_axis(K, a);
  g.doppler_axis_hz = doppler_axis(static_cast<int>(raw.cols()), a);
  g.window_start_s = axes.window_start_s;
  return g;
}

// G = H F_M: DFT over time, unitary.
Eigen::MatrixXcd to_doppler(const Eigen::MatrixXcd& H) {
  const int K = static_cast<int>(H.rows());
  const int M = static_cast<int>(H.cols());
  Eigen::MatrixXcd G(K, M);
  fft::forward_many(H.data(), G.data(), M, K, K, 1);
  return G / std::sqrt(static_cast<double>(M));
}

void check_input(const Eigen::MatrixXcd& H, const SparseModel& model, const SBLConfig& cfg, const GridAxes& axes) {
  if (H.rows() != model.tones() || H.cols() != model.snapshots()) {
    throw ShapeError("SBL window is " + std::to_string(H.rows()) + "x" + std::to_string(H.cols()) + ", model expects " +
                     std::to_string(model.tones()) + "x" + std::to_string(model.snapshots()));
  }
  if (!H.allFinite()) throw NumericalError("non-finite values in the SBL input");
  if (cfg.P < 1 || cfg.iterations < 1) throw DomainError("SBL needs P >= 1 and iterations >= 1");
  if (cfg.U != model.upsampling() || axes.delay_upsampling != model.upsampling()) {
    throw ConfigError("SBL upsampling differs from the model's");
  }
  if (!(cfg.gamma_init >= 0.0) || !(cfg.noise_var_init > 0.0)) throw DomainError("invalid SBL initialization");
}

PeakList select_active(const Eigen::MatrixXd& gamma, int K, int P, const GridAxes& axes) {
  return peak_select_2d(centred_grid(gamma, K, axes), P);
}

// Residual energy of G after projecting each Doppler column onto its active
// delay atoms. Exact: the Doppler DFT is unitary and maps the active columns of
// A onto single Doppler blocks.
double projection_residual(const Eigen::MatrixXcd& G, const Eigen::MatrixXcd& Fk, const PeakList& active) {
  const int M = static_cast<int>(G.cols());
  std::vector<std::vector<int>> per_block(static_cast<std::size_t>(M));
  for (const auto& p : active) per_block[static_cast<std::size_t>(raw_column(p.doppler_bin, M))].push_back(p.delay_bin);
  double res = 0.0;
  for (int m = 0; m < M; ++m) {
    const auto& idx = per_block[static_cast<std::size_t>(m)];
    if (idx.empty()) {
      res += G.col(m).squaredNorm();
      continue;
    }
    Eigen::MatrixXcd A(Fk.rows(), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t i = 0; i < idx.size(); ++i) A.col(static_cast<Eigen::Index>(i)) = Fk.col(idx[i]);
    const Eigen::VectorXcd x = A.colPivHouseholderQr().solve(G.col(m));
    res += (G.col(m) - A * x).squaredNorm();
  }
  return res;
}

double relative_change(const Eigen::MatrixXd& now, const Eigen::MatrixXd& before) {
  const double b = before.norm();
  return b > 0.0 ? (now - before).norm() / b : 0.0;
}

void check_gamma(const Eigen::MatrixXd& gamma) {
  if (!gamma.allFinite() || gamma.minCoeff() < 0.0) throw NumericalError("SBL variances became negative or non-finite");
}

SBLResult zero_result(const SparseModel& model, const GridAxes& axes) {
  SBLResult r;
  r.gamma = centred_grid(Eigen::MatrixXd::Zero(model.delay_bins(), model.snapshots()), model.tones(), axes);
  r.mean = Eigen::MatrixXcd::Zero(model.delay_bins(), model.snapshots());
  return r;
}

}  // namespace

SparseModel::SparseModel(int K, int M, int U) : K_(K), M_(M), U_(U) {
  if (K < 1 || M < 1 || U < 1) throw DomainError("sparse model dimensions must be >= 1");
  const int N = U * K;
  Fk_.resize(K, N);
  const double s = 1.0 / std::sqrt(static_cast<double>(K));
  for (int k = 0; k < K; ++k) {
    for (int n = 0; n < N; ++n) {
      Fk_(k, n) = std::polar(s, -kTwoPi * static_cast<double>((static_cast<long long>(k) * n) % N) / N);
    }
  }
}

Eigen::MatrixXcd SparseModel::forward(const Eigen::MatrixXcd& s) const {
  const int N = delay_bins();
  if (s.rows() != N || s.cols() != M_) throw ShapeError("coefficient grid does not match the model");
  Eigen::MatrixXcd spec(N, M_), H(K_, M_);
  fft::forward_many(s.data(), spec.data(), N, M_, 1, N);
  const Eigen::MatrixXcd top = spec.topRows(K_);
  fft::backward_many(top.data(), H.data(), M_, K_, K_, 1);
  return H / std::sqrt(static_cast<double>(K_) * M_);
}

Eigen::MatrixXcd SparseModel::adjoint(const Eigen::MatrixXcd& H) const {
  const int N = delay_bins();
  if (H.rows() != K_ || H.cols() != M_) throw ShapeError("window does not match the model");
  Eigen::MatrixXcd G(K_, M_);
  fft::forward_many(H.data(), G.data(), M_, K_, K_, 1);
  Eigen::MatrixXcd padded = Eigen::MatrixXcd::Zero(N, M_), s(N, M_);
  padded.topRows(K_) = G;
  fft::backward_many(padded.data(), s.data(), N, M_, 1, N);
  return s / std::sqrt(static_cast<double>(K_) * M_);
}

Eigen::MatrixXcd SparseModel::dense_matrix() const {
  const int N = delay_bins();
  Eigen::MatrixXcd A(K_ * M_, N * M_);
  const double s = 1.0 / std::sqrt(static_cast<double>(M_));
  for (int l = 0; l < M_; ++l) {
    for (int m = 0; m < M_; ++m) {
      const Complex fm = std::polar(s, kTwoPi * static_cast<double>((static_cast<long long>(l) * m) % M_) / M_);
      A.block(static_cast<Eigen::Index>(l) * K_, static_cast<Eigen::Index>(m) * N, K_, N) = fm * Fk_;
    }
  }
  return A;
}

SparseModel build_model(int K, int M, int U) { return SparseModel(K, M, U); }

PeakList peak_select_2d(const RealGrid& gamma, int P) { return top_peaks_2d(gamma, P); }

SBLResult sbl_fit(const Eigen::MatrixXcd& H, const SparseModel& model, const SBLConfig& cfg, const GridAxes& axes,
                  Execution exec) {
  check_input(H, model, cfg, axes);
  const int K = model.tones();
  const int M = model.snapshots();
  const int N = model.delay_bins();
  const double energy = H.squaredNorm();
  if (energy == 0.0) return zero_result(model, axes);
  const double floor = 1e-10 * energy / (static_cast<double>(K) * M);

  const Eigen::MatrixXcd& Fk = model.delay_dictionary();
  const Eigen::MatrixXcd G = to_doppler(H);
  Eigen::MatrixXd gamma = Eigen::MatrixXd::Constant(N, M, cfg.gamma_init);
  double sigma2 = cfg.noise_var_init;
  SBLResult result;

  // Per Doppler block m: Sigma_m = sigma2 I + F~ diag(gamma_m) F~^H. With
  // `mean` set, stores instead the posterior mean gamma_m o F~^H Sigma_m^-1 g_m.
  auto block = [&](int m, const Eigen::MatrixXd& g, Eigen::MatrixXd& next, Eigen::MatrixXcd* mean) {
    Eigen::MatrixXcd Sigma = Fk * g.col(m).cast<Complex>().asDiagonal() * Fk.adjoint();
    Sigma.diagonal().array() += sigma2;
    const Eigen::LLT<Eigen::MatrixXcd> llt(Sigma);
    if (llt.info() != Eigen::Success) throw NumericalError("SBL covariance block is not positive definite");
    const Eigen::VectorXcd b = llt.solve(G.col(m));
    const Eigen::VectorXcd proj = Fk.adjoint() * b;
    if (mean != nullptr) {
      mean->col(m) = g.col(m).cast<Complex>().cwiseProduct(proj);
      return;
    }
    const Eigen::MatrixXcd X = llt.solve(Fk);
    for (int n = 0; n < N; ++n) {
      const double den = std::real(Fk.col(n).dot(X.col(n)));
      next(n, m) = g(n, m) * std::norm(proj(n)) / den;
    }
  };

  for (int it = 0; it < cfg.iterations; ++it) {
    Eigen::MatrixXd next(N, M);
    for_each_index(M, exec, [&](std::int64_t m) { block(static_cast<int>(m), gamma, next, nullptr); });
    check_gamma(next);
    result.converged_delta = relative_change(next, gamma);
    gamma = std::move(next);

    result.active_peaks = select_active(gamma, K, cfg.P, axes);
    const auto active = static_cast<double>(result.active_peaks.size());
    if (static_cast<double>(K) * M <= active) throw DomainError("degenerate dimension: K M <= active-set size");
    const double res = projection_residual(G, Fk, result.active_peaks);
    result.residual_history.push_back(std::sqrt(res));
    sigma2 = std::max(res / (static_cast<double>(K) * M - active), floor);
  }

  result.mean.resize(N, M);
  Eigen::MatrixXd unused;
  for (int m = 0; m < M; ++m) block(m, gamma, unused, &result.mean);
  result.gamma = centred_grid(gamma, K, axes);
  result.noise_var = sigma2;
  return result;
}

SBLResult sbl_fit_dense(const Eigen::MatrixXcd& H, const SparseModel& model, const SBLConfig& cfg,
                        const GridAxes& axes) {
  check_input(H, model, cfg, axes);
  const int K = model.tones();
  const int M = model.snapshots();
  const int N = model.delay_bins();
  const double energy = H.squaredNorm();
  if (energy == 0.0) return zero_result(model, axes);
  const double floor = 1e-10 * energy / (static_cast<double>(K) * M);

  const Eigen::MatrixXcd A = model.dense_matrix();
  const Eigen::VectorXcd h = Eigen::Map<const Eigen::VectorXcd>(H.data(), H.size());
  Eigen::VectorXd gamma = Eigen::VectorXd::Constant(A.cols(), cfg.gamma_init);
  double sigma2 = cfg.noise_var_init;
  SBLResult result;

  auto solver = [&](const Eigen::VectorXd& g) {
    Eigen::MatrixXcd Sigma = A * g.cast<Complex>().asDiagonal() * A.adjoint();
    Sigma.diagonal().array() += sigma2;
    Eigen::LLT<Eigen::MatrixXcd> llt(Sigma);
    if (llt.info() != Eigen::Success) throw NumericalError("SBL covariance is not positive definite");
    return llt;
  };

  for (int it = 0; it < cfg.iterations; ++it) {
    const auto llt = solver(gamma);
    const Eigen::VectorXcd proj = A.adjoint() * llt.solve(h);
    const Eigen::MatrixXcd X = llt.solve(A);
    Eigen::VectorXd next(gamma.size());
    for (Eigen::Index q = 0; q < A.cols(); ++q) {
      next(q) = gamma(q) * std::norm(proj(q)) / std::real(A.col(q).dot(X.col(q)));
    }
    const Eigen::MatrixXd grid = Eigen::Map<const Eigen::MatrixXd>(next.data(), N, M);
    check_gamma(grid);
    result.converged_delta = relative_change(next, gamma);
    gamma = next;

    result.active_peaks = select_active(grid, K, cfg.P, axes);
    const auto active = static_cast<Eigen::Index>(result.active_peaks.size());
    if (static_cast<Eigen::Index>(K) * M <= active) throw DomainError("degenerate dimension: K M <= active-set size");
    double res = h.squaredNorm();
    if (active > 0) {
      Eigen::MatrixXcd AA(A.rows(), active);
      for (Eigen::Index i = 0; i < active; ++i) {
        const Peak& p = result.active_peaks[static_cast<std::size_t>(i)];
        AA.col(i) = A.col(p.delay_bin + static_cast<Eigen::Index>(N) * raw_column(p.doppler_bin, M));
      }
      const Eigen::VectorXcd x = AA.colPivHouseholderQr().solve(h);
      res = (h - AA * x).squaredNorm();
    }
    result.residual_history.push_back(std::sqrt(res));
    sigma2 = std::max(res / static_cast<double>(static_cast<Eigen::Index>(K) * M - active), floor);
  }

  const auto llt = solver(gamma);
  const Eigen::VectorXcd mean = gamma.cast<Complex>().cwiseProduct(A.adjoint() * llt.solve(h));
  result.mean = Eigen::Map<const Eigen::MatrixXcd>(mean.data(), N, M);
  result.gamma = centred_grid(Eigen::Map<const Eigen::MatrixXd>(gamma.data(), N, M), K, axes);
  result.noise_var = sigma2;
  return result;
}

}  // namespace dds
