#include "dds/tfanalysis.hpp"

#include <algorithm>
#include <cmath>

#include "dds/fft.hpp"

namespace dds {

std::vector<double> delay_axis(int K, const GridAxes& axes) {
  const int U = std::max(axes.delay_upsampling, 1);
  std::vector<double> ax(static_cast<std::size_t>(U * K));
  for (int n = 0; n < U * K; ++n) ax[static_cast<std::size_t>(n)] = n / (U * K * axes.tone_spacing_hz);
  return ax;
}

std::vector<double> doppler_axis(int M, const GridAxes& axes) {
  std::vector<double> ax(static_cast<std::size_t>(M));
  for (int c = 0; c < M; ++c) ax[static_cast<std::size_t>(c)] = doppler_index(c, M) / (M * axes.snapshot_time_s);
  return ax;
}

Eigen::MatrixXcd dft_matrix(int N) {
  Eigen::MatrixXcd F(N, N);
  const double s = 1.0 / std::sqrt(static_cast<double>(N));
  for (int k = 0; k < N; ++k) {
    for (int n = 0; n < N; ++n) {
      F(k, n) = std::polar(s, -kTwoPi * static_cast<double>((static_cast<long long>(k) * n) % N) / N);
    }
  }
  return F;
}

Eigen::MatrixXcd sfft_raw(const Eigen::MatrixXcd& H) {
  const int K = static_cast<int>(H.rows());
  const int M = static_cast<int>(H.cols());
  if (K == 0 || M == 0) throw ShapeError("sfft of an empty window");
  Eigen::MatrixXcd tmp(K, M), S(K, M);
  // Inverse DFT down each column (frequency -> delay), then DFT along each row
  // (time -> Doppler). Column-major: columns are contiguous.
  fft::backward_many(H.data(), tmp.data(), K, M, 1, K);
  fft::forward_many(tmp.data(), S.data(), M, K, K, 1);
  S /= std::sqrt(static_cast<double>(K) * M);
  return S;
}

Eigen::MatrixXcd isfft_raw(const Eigen::MatrixXcd& S) {
  const int K = static_cast<int>(S.rows());
  const int M = static_cast<int>(S.cols());
  if (K == 0 || M == 0) throw ShapeError("isfft of an empty grid");
  Eigen::MatrixXcd tmp(K, M), H(K, M);
  fft::forward_many(S.data(), tmp.data(), K, M, 1, K);
  fft::backward_many(tmp.data(), H.data(), M, K, K, 1);
  H /= std::sqrt(static_cast<double>(K) * M);
  return H;
}

Eigen::MatrixXcd center_doppler(const Eigen::MatrixXcd& raw) {
  const int M = static_cast<int>(raw.cols());
  Eigen::MatrixXcd out(raw.rows(), M);
  for (int c = 0; c < M; ++c) out.col(c) = raw.col(((doppler_index(c, M) % M) + M) % M);
  return out;
}

Eigen::MatrixXcd uncenter_doppler(const Eigen::MatrixXcd& centred) {
  const int M = static_cast<int>(centred.cols());
  Eigen::MatrixXcd out(centred.rows(), M);
  for (int c = 0; c < M; ++c) out.col(((doppler_index(c, M) % M) + M) % M) = centred.col(c);
  return out;
}

ComplexGrid sfft(const Eigen::MatrixXcd& H, const GridAxes& axes) {
  ComplexGrid S;
  S.values = center_doppler(sfft_raw(H));
  S.delay_axis_s = delay_axis(static_cast<int>(H.rows()), GridAxes{axes.tone_spacing_hz, axes.snapshot_time_s, 1});
  S.doppler_axis_hz = doppler_axis(static_cast<int>(H.cols()), axes);
  S.window_start_s = axes.window_start_s;
  return S;
}

Eigen::MatrixXcd isfft(const ComplexGrid& S) { return isfft_raw(uncenter_doppler(S.values)); }

RealGrid lsf_estimate(const Eigen::MatrixXcd& H, const LSFConfig& cfg, const GridAxes& axes, Execution exec) {
  const int K = cfg.tone_count;
  const int M = cfg.window_length;
  if (H.rows() != K || H.cols() != M) {
    throw ShapeError("LSF window is " + std::to_string(H.rows()) + "x" + std::to_string(H.cols()) + ", expected " +
                     std::to_string(K) + "x" + std::to_string(M));
  }
  if (cfg.tapers_time < 1 || cfg.tapers_freq < 1) throw DomainError("taper counts must be >= 1");
  const Eigen::MatrixXd ut = dpss_tapers(M, cfg.nw, cfg.tapers_time);
  const Eigen::MatrixXd uf = dpss_tapers(K, cfg.nw, cfg.tapers_freq);

  const int pairs = cfg.tapers_time * cfg.tapers_freq;
  std::vector<Eigen::MatrixXd> parts(static_cast<std::size_t>(pairs));
  auto one = [&](int idx) {
    const int i = idx / cfg.tapers_freq;
    const int j = idx % cfg.tapers_freq;
    const Eigen::MatrixXd w = uf.col(j) * ut.col(i).transpose();
    const Eigen::MatrixXcd S = sfft_raw(H.cwiseProduct(w.cast<Complex>()));
    parts[static_cast<std::size_t>(idx)] = S.cwiseAbs2();
  };
  for_each_index(pairs, exec, [&](std::int64_t idx) { one(static_cast<int>(idx)); });
  // Fixed summation order keeps serial and parallel results identical.
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(K, M);
  for (const auto& p : parts) acc += p;
  acc /= static_cast<double>(pairs);

  RealGrid out;
  out.values = center_doppler(acc.cast<Complex>()).real();
  out.delay_axis_s = delay_axis(K, GridAxes{axes.tone_spacing_hz, axes.snapshot_time_s, 1});
  out.doppler_axis_hz = doppler_axis(M, axes);
  out.window_start_s = axes.window_start_s;
  return out;
}

std::vector<double> dsd(const RealGrid& lsf) {
  std::vector<double> d(static_cast<std::size_t>(lsf.values.cols()));
  for (Eigen::Index m = 0; m < lsf.values.cols(); ++m) d[static_cast<std::size_t>(m)] = lsf.values.col(m).sum();
  return d;
}

RealGrid normalized(const RealGrid& grid) {
  RealGrid out = grid;
  const double total = grid.values.sum();
  if (total > 0.0) out.values /= total;
  return out;
}

PeakList top_peaks_2d(const RealGrid& grid, int P) {
  if (P < 1) throw DomainError("peak count must be >= 1");
  const int R = grid.delay_bins();
  const int C = grid.doppler_bins();
  PeakList peaks;
  for (int r = 0; r < R; ++r) {
    for (int c = 0; c < C; ++c) {
      const double v = grid.values(r, c);
      bool strict = true;
      for (int dr = -1; dr <= 1 && strict; ++dr) {
        for (int dc = -1; dc <= 1; ++dc) {
          const int rr = ((r + dr) % R + R) % R;
          const int cc = ((c + dc) % C + C) % C;
          if (rr == r && cc == c) continue;
          if (!(v > grid.values(rr, cc))) {
            strict = false;
            break;
          }
        }
      }
      if (!strict) continue;
      Peak p;
      p.delay_bin = r;
      p.doppler_bin = doppler_index(c, C);
      p.delay_s = r < static_cast<int>(grid.delay_axis_s.size()) ? grid.delay_axis_s[static_cast<std::size_t>(r)] : 0.0;
      p.doppler_hz =
          c < static_cast<int>(grid.doppler_axis_hz.size()) ? grid.doppler_axis_hz[static_cast<std::size_t>(c)] : 0.0;
      p.power = v;
      peaks.push_back(p);
    }
  }
  std::sort(peaks.begin(), peaks.end(), [](const Peak& a, const Peak& b) {
    if (a.power != b.power) return a.power > b.power;
    if (a.delay_bin != b.delay_bin) return a.delay_bin < b.delay_bin;
    return std::abs(a.doppler_bin) < std::abs(b.doppler_bin);
  });
  if (static_cast<int>(peaks.size()) > P) peaks.resize(static_cast<std::size_t>(P));
  return peaks;
}

Eigen::MatrixXcd extract_window(const TransferFunctionGrid& H, int first, int M) {
  if (first < 0 || M < 1 || first + M > H.snapshots()) {
    throw ShapeError("evaluation window [" + std::to_string(first) + ", " + std::to_string(first + M) +
                     ") outside the " + std::to_string(H.snapshots()) + " snapshots");
  }
  return H.values.block(first, 0, M, H.tones()).transpose();
}

}  // namespace dds
