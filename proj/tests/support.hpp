#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <random>
#include <vector>

#include "dds/channel.hpp"
#include "dds/params.hpp"

namespace dds::testing {

inline Eigen::MatrixXcd random_grid(int rows, int cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n;
  Eigen::MatrixXcd g(rows, cols);
  for (Eigen::Index i = 0; i < g.size(); ++i) g(i) = Complex(n(rng), n(rng));
  return g;
}

// H[k, l] = exp(-j 2 pi k n0 / K) exp(+j 2 pi l m0 / M): one tap on the native grid.
inline Eigen::MatrixXcd planted_tap(int K, int M, int n0, int m0, Complex a = 1.0) {
  Eigen::MatrixXcd H(K, M);
  for (int k = 0; k < K; ++k) {
    for (int l = 0; l < M; ++l) H(k, l) = a * std::polar(1.0, -kTwoPi * k * n0 / K + kTwoPi * l * m0 / M);
  }
  return H;
}

inline void add_noise(Eigen::MatrixXcd& H, double variance, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, std::sqrt(variance / 2.0));
  for (Eigen::Index i = 0; i < H.size(); ++i) H(i) += Complex(n(rng), n(rng));
}

// Static paths for synthesize().
inline PathFunction static_paths(std::vector<Path> paths) {
  return [paths](double, int) { return paths; };
}

inline Path make_path(int id, double delay_s, Complex gain, double doppler_hz = 0.0) {
  Path p;
  p.id = id;
  p.delay_s = delay_s;
  p.gain = gain;
  p.doppler_hz = doppler_hz;
  return p;
}

// Single-TX sounder with N averaged periods; otherwise the reference design.
inline SounderConfig single_tx(int averaging_count) {
  SounderConfig cfg = reference_config();
  cfg.tx_count = 1;
  cfg.averaging_count = averaging_count;
  cfg.snapshot_time_s = averaging_count * cfg.sequence_period_s;
  return cfg;
}

inline double median_of(std::vector<double> v) {
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2), v.end());
  return v[v.size() / 2];
}

}  // namespace dds::testing
