#include "dds/rxproc.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dds/fft.hpp"

namespace dds {
namespace {

// Per-period tone correlations y[p][k] = X_p[b_k] conj(R_k), p = 0..P-1, for
// periods starting at `first` (absolute index into `samples`).
Eigen::MatrixXcd period_correlations(const Complex* samples, int periods, int L, std::span<const int> bins,
                                     std::span<const Complex> ref) {
  Eigen::MatrixXcd y(periods, static_cast<Eigen::Index>(bins.size()));
  std::vector<Complex> X(static_cast<std::size_t>(L));
  for (int p = 0; p < periods; ++p) {
    fft::forward(std::span<const Complex>(samples + static_cast<std::ptrdiff_t>(p) * L, static_cast<std::size_t>(L)), X);
    for (std::size_t k = 0; k < bins.size(); ++k) {
      y(p, static_cast<Eigen::Index>(k)) = X[static_cast<std::size_t>(bins[k])] * std::conj(ref[k]);
    }
  }
  return y;
}

// Z(f) = sum_k |sum_p y[p][k] exp(-j 2 pi f p T)|^2.
double correlator(const Eigen::MatrixXcd& y, double period_s, double f) {
  const Eigen::Index P = y.rows();
  Eigen::VectorXcd rot(P);
  for (Eigen::Index p = 0; p < P; ++p) rot(p) = std::polar(1.0, -kTwoPi * f * static_cast<double>(p) * period_s);
  return (y.transpose() * rot).squaredNorm();
}

// Vertex offset of the parabola through (-1, a), (0, b), (1, c), in units of the spacing.
double parabola_vertex(double a, double b, double c) {
  const double den = a - 2.0 * b + c;
  if (den >= 0.0) return 0.0;
  return std::clamp(0.5 * (a - c) / den, -0.5, 0.5);
}

// Quadratic refinement of a correlator maximum near f0 with initial spacing h.
double refine_peak(const Eigen::MatrixXcd& y, double period_s, double f0, double h, int rounds) {
  double f = f0;
  for (int r = 0; r < rounds; ++r) {
    const double a = correlator(y, period_s, f - h);
    const double b = correlator(y, period_s, f);
    const double c = correlator(y, period_s, f + h);
    f += h * parabola_vertex(a, b, c);
    h *= 0.25;
  }
  return f;
}

struct Reference {
  std::vector<int> bins;
  std::vector<Complex> weights;
};

Reference reference_from_signal(const SampledSignal& ref) {
  const std::size_t L = ref.size();
  std::vector<Complex> X(L);
  fft::forward(ref.samples, X);
  double peak = 0.0;
  for (const auto& x : X) peak = std::max(peak, std::abs(x));
  Reference r;
  for (std::size_t b = 0; b < L; ++b) {
    if (std::abs(X[b]) > 1e-9 * peak) {
      r.bins.push_back(static_cast<int>(b));
      r.weights.push_back(X[b]);
    }
  }
  return r;
}

double los_offset(const Complex* samples, const SounderConfig& cfg, const Reference& ref, double cfo_hz) {
  const int L = cfg.samples_per_period();
  const int N = cfg.averaging_count;
  const double T = static_cast<double>(L) / cfg.sample_rate_hz;
  const Eigen::MatrixXcd y = period_correlations(samples, N, L, ref.bins, ref.weights);

  // Search cfo +- 2 nu_max on a grid of 1/8 of the snapshot resolution.
  const double span = 2.0 * cfg.max_doppler_hz;
  const double grid = 1.0 / (8.0 * N * T);
  const int half = static_cast<int>(std::ceil(span / grid));
  int best = 0;
  double best_val = -1.0;
  std::vector<double> vals(static_cast<std::size_t>(2 * half + 1));
  for (int i = -half; i <= half; ++i) {
    const double v = correlator(y, T, cfo_hz + i * grid);
    vals[static_cast<std::size_t>(i + half)] = v;
    if (v > best_val) {
      best_val = v;
      best = i;
    }
  }
  double f = cfo_hz + best * grid;
  if (best > -half && best < half) {
    f += grid * parabola_vertex(vals[static_cast<std::size_t>(best + half - 1)], best_val,
                                vals[static_cast<std::size_t>(best + half + 1)]);
  }
  return refine_peak(y, T, f, grid / 8.0, 2);
}

AveragedSnapshots average_impl(const SampledSignal& rx, const SounderConfig& cfg, double cfo_hz, int tx_index,
                               bool track_offset, Execution exec) {
  const int L = cfg.samples_per_period();
  const int N = cfg.averaging_count;
  const std::int64_t snap = static_cast<std::int64_t>(N) * L;
  const std::int64_t Q = static_cast<std::int64_t>(rx.size()) / snap;
  if (Q < 1) throw ShapeError("record shorter than one snapshot");
  if (rx.sample_rate_hz != cfg.sample_rate_hz) throw ConfigError("record sample rate differs from the sounder's");

  const TonePlan plan = make_tone_plan(cfg, tx_index);
  const SampledSignal period = multitone_waveform(cfg, plan);
  const Reference ref = reference_from_signal(period);
  const double fs = rx.sample_rate_hz;

  AveragedSnapshots out;
  out.tx_index = tx_index;
  out.periods.resize(Q, L);
  out.snapshot_times_s.resize(static_cast<std::size_t>(Q));
  out.doppler_hz.resize(static_cast<std::size_t>(Q));

  auto one = [&](std::int64_t q) {
    const Complex* x = rx.samples.data() + q * snap;
    const double centre_offset = 0.5 * static_cast<double>(snap - 1);
    const double tc = rx.t0_s + (static_cast<double>(q * snap) + centre_offset) / fs;
    const double f = (track_offset && N > 1) ? los_offset(x, cfg, ref, cfo_hz) : cfo_hz;

    // Derotate by f about the snapshot centre and accumulate the periods.
    std::vector<Complex> acc(static_cast<std::size_t>(L), Complex{});
    const Complex step = std::polar(1.0, -kTwoPi * f / fs);
    for (int p = 0; p < N; ++p) {
      const double n0 = static_cast<double>(p) * L - centre_offset;
      Complex phasor = std::polar(1.0, -kTwoPi * f * n0 / fs);
      const Complex* xp = x + static_cast<std::ptrdiff_t>(p) * L;
      for (int n = 0; n < L; ++n) {
        acc[static_cast<std::size_t>(n)] += xp[n] * phasor;
        phasor *= step;
      }
    }
    // The derotated average carries exp(j 2 pi f tc); keep its Doppler part.
    const Complex restore = std::polar(1.0 / N, -kTwoPi * cfo_hz * tc);
    for (int n = 0; n < L; ++n) out.periods(q, n) = acc[static_cast<std::size_t>(n)] * restore;
    out.snapshot_times_s[static_cast<std::size_t>(q)] = tc;
    out.doppler_hz[static_cast<std::size_t>(q)] = f - cfo_hz;
  };

  for_each_index(Q, exec, one);
  return out;
}

}  // namespace

double estimate_cfo(const SampledSignal& rx, const SampledSignal& reference, const CfoSearch& search) {
  const int L = static_cast<int>(reference.size());
  if (L < 1) throw DomainError("empty CFO reference");
  const int P = static_cast<int>(rx.size() / static_cast<std::size_t>(L));
  if (P < 2) throw ShapeError("standstill record must contain at least two reference periods");
  const double T = static_cast<double>(L) / rx.sample_rate_hz;

  const Reference ref = reference_from_signal(reference);
  const Eigen::MatrixXcd y = period_correlations(rx.samples.data(), P, L, ref.bins, ref.weights);

  // Coarse search: zero-padded FFT over periods, energy summed over tones.
  int nfft = 1;
  while (nfft < 4 * P) nfft *= 2;
  std::vector<double> power(static_cast<std::size_t>(nfft), 0.0);
  std::vector<Complex> col(static_cast<std::size_t>(nfft)), spec(static_cast<std::size_t>(nfft));
  for (Eigen::Index k = 0; k < y.cols(); ++k) {
    std::fill(col.begin(), col.end(), Complex{});
    for (int p = 0; p < P; ++p) col[static_cast<std::size_t>(p)] = y(p, k);
    fft::forward(col, spec);
    for (int i = 0; i < nfft; ++i) power[static_cast<std::size_t>(i)] += std::norm(spec[static_cast<std::size_t>(i)]);
  }
  const double grid = 1.0 / (nfft * T);
  auto freq_of = [&](int i) { return (2 * i >= nfft ? i - nfft : i) * grid; };

  int best = -1;
  for (int i = 0; i < nfft; ++i) {
    if (search.max_abs_hz > 0.0 && std::abs(freq_of(i)) > search.max_abs_hz) continue;
    if (best < 0 || power[static_cast<std::size_t>(i)] > power[static_cast<std::size_t>(best)]) best = i;
  }
  std::vector<double> sorted = power;
  std::nth_element(sorted.begin(), sorted.begin() + nfft / 2, sorted.end());
  const double median = sorted[static_cast<std::size_t>(nfft / 2)];
  if (!(power[static_cast<std::size_t>(best)] > search.detection_ratio * median)) {
    throw NumericalError("no sounding signal detected in the standstill record");
  }

  const double a = power[static_cast<std::size_t>((best - 1 + nfft) % nfft)];
  const double c = power[static_cast<std::size_t>((best + 1) % nfft)];
  const double f0 = freq_of(best) + grid * parabola_vertex(a, power[static_cast<std::size_t>(best)], c);
  return refine_peak(y, T, f0, grid / 2.0, 6);
}

AveragedSnapshots coherent_average(const SampledSignal& rx, const SounderConfig& cfg, double cfo_hz, int tx_index,
                                   Execution exec) {
  return average_impl(rx, cfg, cfo_hz, tx_index, true, exec);
}

AveragedSnapshots plain_average(const SampledSignal& rx, const SounderConfig& cfg, double cfo_hz, int tx_index) {
  return average_impl(rx, cfg, cfo_hz, tx_index, false, Execution::Parallel);
}

TransferFunctionGrid demultiplex(const AveragedSnapshots& avg, const SounderConfig& cfg, const TonePlan& plan) {
  const int L = cfg.samples_per_period();
  if (avg.periods.cols() != L) throw ConfigError("averaged period length does not match the sounder's period");
  const std::vector<int> bins = tone_bins(cfg, plan);
  const std::vector<int> free = unoccupied_bins(cfg);
  const Eigen::Index Q = avg.periods.rows();
  const Eigen::Index K = static_cast<Eigen::Index>(bins.size());

  TransferFunctionGrid H;
  H.tx_index = plan.tx_index;
  H.values.resize(Q, K);
  H.snapshot_times_s = avg.snapshot_times_s;
  H.tone_frequencies_hz = plan.tone_frequencies_hz;
  H.noise_power.assign(static_cast<std::size_t>(Q), 0.0);
  H.doppler_hz = avg.doppler_hz;

  std::vector<Complex> row(static_cast<std::size_t>(L)), X(static_cast<std::size_t>(L));
  const double scale = static_cast<double>(L);
  for (Eigen::Index q = 0; q < Q; ++q) {
    for (int n = 0; n < L; ++n) row[static_cast<std::size_t>(n)] = avg.periods(q, n);
    fft::forward(row, X);
    for (Eigen::Index k = 0; k < K; ++k) {
      H.values(q, k) = X[static_cast<std::size_t>(bins[static_cast<std::size_t>(k)])] /
                       (scale * plan.tone_weights[static_cast<std::size_t>(k)]);
    }
    double noise = 0.0;
    for (int b : free) noise += std::norm(X[static_cast<std::size_t>(b)]);
    H.noise_power[static_cast<std::size_t>(q)] = free.empty() ? 0.0 : noise / (free.size() * scale * scale);
  }
  return H;
}

TransferFunctionGrid align_los_delay(const TransferFunctionGrid& H, const ScenarioConfig& sc) {
  const double tau = (sc.tx_start_position - sc.rx_position).norm() / kSpeedOfLight;
  TransferFunctionGrid out = H;
  for (Eigen::Index k = 0; k < H.values.cols(); ++k) {
    const Complex ramp = std::polar(1.0, kTwoPi * H.tone_frequencies_hz[static_cast<std::size_t>(k)] * tau);
    out.values.col(k) *= ramp;
  }
  return out;
}

std::vector<double> snr_per_tx(const TransferFunctionGrid& H, std::span<const double> noise_power) {
  if (noise_power.size() != static_cast<std::size_t>(H.values.rows())) {
    throw ShapeError("one noise estimate per snapshot required");
  }
  std::vector<double> snr(noise_power.size());
  for (Eigen::Index q = 0; q < H.values.rows(); ++q) {
    const double noise = noise_power[static_cast<std::size_t>(q)];
    if (!(noise > 0.0)) throw DomainError("degenerate input: zero noise power estimate");
    snr[static_cast<std::size_t>(q)] = power_to_db(H.values.row(q).squaredNorm() / H.values.cols() / noise);
  }
  return snr;
}

}  // namespace dds
