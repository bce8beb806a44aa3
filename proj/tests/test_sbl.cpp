#include <doctest.h>

#include <random>

#include "dds/sbl.hpp"
#include "support.hpp"

using namespace dds;
using namespace dds::testing;

namespace {

GridAxes axes_for(int U) { return GridAxes{4761904.761904762, 1.7808e-4, U, 0.0}; }

SBLConfig config(int P, int U, int iterations = 10) {
  SBLConfig c;
  c.P = P;
  c.U = U;
  c.iterations = iterations;
  return c;
}

struct Tap {
  int n;  // delay bin on the U K grid
  int m;  // signed Doppler bin
  Complex a;
};

Eigen::MatrixXcd taps_window(const SparseModel& model, const std::vector<Tap>& taps) {
  Eigen::MatrixXcd s = Eigen::MatrixXcd::Zero(model.delay_bins(), model.snapshots());
  const int M = model.snapshots();
  for (const auto& t : taps) s(t.n, ((t.m % M) + M) % M) += t.a;
  return model.forward(s);
}

bool found(const PeakList& peaks, const Tap& t) {
  for (const auto& p : peaks)
    if (p.delay_bin == t.n && p.doppler_bin == t.m) return true;
  return false;
}

}  // namespace

TEST_CASE("sparse model operators") {
  const SparseModel model(5, 6, 3);
  const Eigen::MatrixXcd A = model.dense_matrix();
  CHECK(A.rows() == 30);
  CHECK(A.cols() == 90);
  CHECK((A.colwise().norm().array() - 1.0).abs().maxCoeff() < 1e-12);

  const Eigen::MatrixXcd s = random_grid(15, 6, 1);
  const Eigen::VectorXcd vs = Eigen::Map<const Eigen::VectorXcd>(s.data(), s.size());
  const Eigen::MatrixXcd H = model.forward(s);
  CHECK((Eigen::Map<const Eigen::VectorXcd>(H.data(), H.size()) - A * vs).cwiseAbs().maxCoeff() < 1e-12);

  const Eigen::MatrixXcd h = random_grid(5, 6, 2);
  const Eigen::VectorXcd vh = Eigen::Map<const Eigen::VectorXcd>(h.data(), h.size());
  const Eigen::MatrixXcd adj = model.adjoint(h);
  CHECK((Eigen::Map<const Eigen::VectorXcd>(adj.data(), adj.size()) - A.adjoint() * vh).cwiseAbs().maxCoeff() < 1e-12);

  // with U = 1 the forward map is the inverse sfft
  const SparseModel native(5, 6, 1);
  const Eigen::MatrixXcd s1 = random_grid(5, 6, 3);
  CHECK((native.forward(s1) - isfft_raw(s1)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK_THROWS_AS(SparseModel(0, 4, 1), DomainError);
  CHECK_THROWS_AS((void)model.forward(s1), ShapeError);
}

TEST_CASE("block-diagonal SBL matches the dense reference") {
  const SparseModel model(5, 4, 2);
  Eigen::MatrixXcd H = taps_window(model, {{3, 1, 2.0}, {7, -2, Complex(0.0, 1.0)}});
  add_noise(H, 0.01, 4);
  const auto cfg = config(3, 2, 6);
  const auto fast = sbl_fit(H, model, cfg, axes_for(2), Execution::Serial);
  const auto dense = sbl_fit_dense(H, model, cfg, axes_for(2));
  CHECK((fast.gamma.values - dense.gamma.values).cwiseAbs().maxCoeff() < 1e-8 * dense.gamma.values.maxCoeff());
  CHECK(fast.noise_var == doctest::Approx(dense.noise_var).epsilon(1e-8));
  CHECK((fast.mean - dense.mean).cwiseAbs().maxCoeff() < 1e-8);
  REQUIRE(fast.residual_history.size() == dense.residual_history.size());
  for (std::size_t i = 0; i < fast.residual_history.size(); ++i) {
    CHECK(fast.residual_history[i] == doctest::Approx(dense.residual_history[i]).epsilon(1e-8));
  }
}

TEST_CASE("noiseless taps are recovered exactly on the upsampled grid") {
  const int K = 21, M = 32, U = 4;
  const SparseModel model(K, M, U);
  std::mt19937_64 rng(20);
  std::uniform_int_distribution<int> dn(0, U * K - 1), dm(-M / 2, M / 2 - 1);
  std::uniform_real_distribution<double> ph(0.0, kTwoPi);
  int exact = 0;
  const int trials = 10;
  for (int t = 0; t < trials; ++t) {
    std::vector<Tap> taps;
    while (taps.size() < 3) {
      const Tap c{dn(rng), dm(rng), std::polar(1.0 + 0.5 * static_cast<double>(taps.size()), ph(rng))};
      bool clear = true;
      for (const auto& o : taps) {
        const int d = std::abs(o.n - c.n);
        if (std::min(d, U * K - d) < 2 * U && o.m == c.m) clear = false;
      }
      if (clear) taps.push_back(c);
    }
    const auto r = sbl_fit(taps_window(model, taps), model, config(3, U), axes_for(U));
    bool all = true;
    for (const auto& tp : taps) all = all && found(r.active_peaks, tp);
    exact += all ? 1 : 0;
  }
  CHECK(exact == trials);
}

TEST_CASE("two taps 2U bins apart at 25 dB") {
  const int K = 21, M = 32, U = 4;
  const SparseModel model(K, M, U);
  const std::vector<Tap> taps{{20, 5, 1.0}, {28, 5, Complex(0.0, 0.9)}};
  Eigen::MatrixXcd H = taps_window(model, taps);
  const double sigma2 = (H.squaredNorm() / H.size()) / db_to_power(25.0);
  add_noise(H, sigma2, 6);
  const auto r = sbl_fit(H, model, config(10, U), axes_for(U));
  CHECK(found(r.active_peaks, taps[0]));
  CHECK(found(r.active_peaks, taps[1]));
  REQUIRE(r.active_peaks.size() >= 2);
  // the two strongest entries are the planted taps
  CHECK((found({r.active_peaks[0], r.active_peaks[1]}, taps[0]) && found({r.active_peaks[0], r.active_peaks[1]}, taps[1])));
  CHECK(r.noise_var == doctest::Approx(sigma2).epsilon(0.2));
}

TEST_CASE("noise variance follows the active-set residual") {
  const SparseModel model(21, 32, 4);
  Eigen::MatrixXcd H = taps_window(model, {{40, -3, 1.0}});
  add_noise(H, 1e-3, 7);
  const auto cfg = config(5, 4);
  const auto r = sbl_fit(H, model, cfg, axes_for(4));
  REQUIRE(r.residual_history.size() == 10);
  const double res = r.residual_history.back();
  CHECK(r.noise_var == doctest::Approx(res * res / (21.0 * 32.0 - static_cast<double>(r.active_peaks.size()))));
  CHECK(r.noise_var == doctest::Approx(1e-3).epsilon(0.15));
  CHECK(r.converged_delta >= 0.0);
  CHECK(r.gamma.delay_bins() == 84);
  CHECK(r.gamma.doppler_bins() == 32);
  CHECK(r.gamma.delay_axis_s[4] == doctest::Approx(10e-9));
}

TEST_CASE("scaling the input scales gamma when the initialization scales too") {
  const SparseModel model(21, 16, 2);
  Eigen::MatrixXcd H = taps_window(model, {{9, 2, 1.0}, {30, -4, 0.5}});
  add_noise(H, 1e-2, 8);
  const double c = 37.0;
  const auto a = sbl_fit(H, model, config(4, 2), axes_for(2));
  auto scaled = config(4, 2);
  scaled.gamma_init *= c * c;
  scaled.noise_var_init *= c * c;
  const auto b = sbl_fit(H * c, model, scaled, axes_for(2));
  CHECK((b.gamma.values / (c * c) - a.gamma.values).cwiseAbs().maxCoeff() < 1e-9 * a.gamma.values.maxCoeff());
  CHECK(b.noise_var / (c * c) == doctest::Approx(a.noise_var).epsilon(1e-9));
}

TEST_CASE("serial and parallel SBL are identical") {
  const SparseModel model(21, 32, 4);
  const Eigen::MatrixXcd H = random_grid(21, 32, 9);
  const auto a = sbl_fit(H, model, config(10, 4, 3), axes_for(4), Execution::Serial);
  const auto b = sbl_fit(H, model, config(10, 4, 3), axes_for(4), Execution::Parallel);
  CHECK(a.gamma.values == b.gamma.values);
  CHECK(a.noise_var == b.noise_var);
}

TEST_CASE("SBL input checks") {
  const SparseModel model(5, 4, 2);
  const auto cfg = config(2, 2);
  CHECK_THROWS_AS(sbl_fit(random_grid(4, 4, 1), model, cfg, axes_for(2)), ShapeError);
  Eigen::MatrixXcd bad = random_grid(5, 4, 1);
  bad(1, 1) = Complex(std::nan(""), 0.0);
  CHECK_THROWS_AS(sbl_fit(bad, model, cfg, axes_for(2)), NumericalError);
  CHECK_THROWS_AS(sbl_fit(random_grid(5, 4, 1), model, config(2, 3), axes_for(2)), ConfigError);
  CHECK_THROWS_AS(sbl_fit(random_grid(5, 4, 1), model, cfg, axes_for(1)), ConfigError);
  auto neg = cfg;
  neg.noise_var_init = 0.0;
  CHECK_THROWS_AS(sbl_fit(random_grid(5, 4, 1), model, neg, axes_for(2)), DomainError);
  const SparseModel tiny(1, 1, 1);
  CHECK_THROWS_AS(sbl_fit(Eigen::MatrixXcd::Ones(1, 1), tiny, config(1, 1), axes_for(1)), DomainError);

  const auto zero = sbl_fit(Eigen::MatrixXcd::Zero(5, 4), model, cfg, axes_for(2));
  CHECK(zero.gamma.values.sum() == 0.0);
  CHECK(zero.active_peaks.empty());
  CHECK(zero.noise_var == 0.0);
}

TEST_CASE("U = 1 fit reproduces the window to within the noise") {
  const int K = 21, M = 32;
  const SparseModel model(K, M, 1);
  Eigen::MatrixXcd H = taps_window(model, {{4, 2, 1.0}, {9, -5, Complex(0.3, 0.4)}});
  const double sigma2 = 1e-3;
  add_noise(H, sigma2, 10);
  const auto r = sbl_fit(H, model, config(10, 1), axes_for(1));
  // same grid as the native sfft
  CHECK(r.gamma.delay_axis_s == sfft(H, axes_for(1)).delay_axis_s);
  CHECK(r.gamma.doppler_axis_hz == sfft(H, axes_for(1)).doppler_axis_hz);
  const double rms = (H - model.forward(r.mean)).norm() / std::sqrt(static_cast<double>(K * M));
  CHECK(rms < std::sqrt(sigma2));
  CHECK(rms < std::sqrt(r.noise_var));
}
