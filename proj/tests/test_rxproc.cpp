#include <doctest.h>

#include <algorithm>

#include "dds/rxproc.hpp"
#include "support.hpp"

using namespace dds;
using namespace dds::testing;

namespace {

std::vector<SampledSignal> periods(const SounderConfig& cfg) {
  std::vector<SampledSignal> out;
  for (int i = 0; i < cfg.tx_count; ++i) out.push_back(multitone_waveform(cfg, make_tone_plan(cfg, i)));
  return out;
}

SampledSignal record(const SounderConfig& cfg, const PathFunction& fn, std::int64_t snapshots, double noise = 0.0,
                     std::uint64_t seed = 1, double cfo = 0.0) {
  SynthesisParams p;
  p.center_frequency_hz = cfg.center_frequency_hz;
  p.sample_rate_hz = cfg.sample_rate_hz;
  p.length = snapshots * cfg.samples_per_snapshot();
  p.chunk_samples = cfg.samples_per_snapshot();
  p.cfo_hz = cfo;
  p.noise_power = noise;
  p.seed = seed;
  return synthesize(periods(cfg), fn, p);
}

// One path whose delay shrinks at the rate that produces Doppler nu.
PathFunction moving_path(const SounderConfig& cfg, double tau0, double nu, Complex g = 1.0) {
  const double fc = cfg.center_frequency_hz;
  return [=](double t, int) { return std::vector<Path>{make_path(0, tau0 - nu * t / fc, g, nu)}; };
}

TransferFunctionGrid measure(const SampledSignal& rx, const SounderConfig& cfg, int tx = 0, double cfo = 0.0) {
  return demultiplex(coherent_average(rx, cfg, cfo, tx), cfg, make_tone_plan(cfg, tx));
}

// Delay profile magnitude at bin n of a tone vector.
double delay_bin_power(const Eigen::RowVectorXcd& h, const std::vector<double>& f, double df, int n) {
  const int K = static_cast<int>(h.size());
  Complex acc{};
  for (int k = 0; k < K; ++k) acc += h(k) * std::polar(1.0, kTwoPi * f[static_cast<std::size_t>(k)] * n / (K * df));
  return std::norm(acc);
}

}  // namespace

TEST_CASE("CFO from a standstill record") {
  const auto cfg = single_tx(1);
  const auto ref = periods(cfg).front();
  const auto los = static_paths({make_path(0, 137e-9, Complex(0.6, 0.8))});
  const double K = cfg.tone_count;

  SUBCASE("1234 Hz at 20 dB") {
    const auto rx = record(cfg, los, 10000, K / 100.0, 7, 1234.0);
    CHECK(std::abs(estimate_cfo(rx, ref) - 1234.0) < 1.0);
  }
  SUBCASE("noiseless zero offset") {
    const auto rx = record(cfg, los, 4000);
    CHECK(std::abs(estimate_cfo(rx, ref)) < 0.01);
  }
  SUBCASE("negative offset") {
    const auto rx = record(cfg, los, 4000, 0.0, 1, -20000.0);
    CHECK(estimate_cfo(rx, ref) == doctest::Approx(-20000.0).epsilon(1e-6));
  }
  SUBCASE("pure noise is not a detection") {
    const auto rx = record(cfg, static_paths({}), 4000, 1.0, 3);
    CHECK_THROWS_AS(estimate_cfo(rx, ref), NumericalError);
  }
  SUBCASE("one period is too short") {
    const auto rx = record(cfg, los, 1);
    CHECK_THROWS_AS(estimate_cfo(rx, ref), ShapeError);
  }
}

TEST_CASE("N = 1 averaging is the identity") {
  const auto cfg = single_tx(1);
  const auto rx = record(cfg, static_paths({make_path(0, 30e-9, Complex(0.3, 0.1))}), 12, 1e-3, 4);
  const auto avg = coherent_average(rx, cfg, 0.0, 0);
  REQUIRE(avg.periods.rows() == 12);
  for (int q = 0; q < 12; ++q) {
    for (int n = 0; n < 105; ++n) CHECK(avg.periods(q, n) == rx.samples[static_cast<std::size_t>(q * 105 + n)]);
  }
}

TEST_CASE("static channels are measured exactly") {
  auto cfg = single_tx(4);
  const auto plan = make_tone_plan(cfg, 0);

  SUBCASE("flat gain") {
    const Complex g(0.25, -0.5);
    const auto H = measure(record(cfg, static_paths({make_path(0, 0.0, g)}), 3), cfg);
    CHECK((H.values.array() - g).abs().maxCoeff() < 1e-9);
  }
  SUBCASE("two paths against the closed form") {
    const double t1 = 37.3e-9, t2 = 81.9e-9;
    const Complex g1(1.0, 0.0), g2(-0.3, 0.2);
    const auto H = measure(record(cfg, static_paths({make_path(0, t1, g1), make_path(1, t2, g2)}), 2), cfg);
    const double fc = cfg.center_frequency_hz;
    double err = 0.0;
    for (int k = 0; k < cfg.tone_count; ++k) {
      const double f = plan.tone_frequencies_hz[static_cast<std::size_t>(k)];
      const Complex want = g1 * std::polar(1.0, -kTwoPi * (fc + f) * t1) + g2 * std::polar(1.0, -kTwoPi * (fc + f) * t2);
      err = std::max(err, std::abs(H.values(1, k) - want));
    }
    CHECK(err < 1e-6);
  }
  SUBCASE("the other transmitter's comb reads zero") {
    cfg.tx_count = 2;
    const PathFunction only_tx0 = [](double, int tx) {
      return tx == 0 ? std::vector<Path>{make_path(0, 12e-9, 1.0)} : std::vector<Path>{};
    };
    const auto rx = record(cfg, only_tx0, 2);
    CHECK(measure(rx, cfg, 0).values.cwiseAbs().minCoeff() > 0.99);
    CHECK(measure(rx, cfg, 1).values.cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("averaging N periods lowers the noise floor by 10 log10 N") {
  for (int N : {4, 16, 64, 212}) {
    const auto cfg = single_tx(N);
    const int L = cfg.samples_per_period();
    const double sigma2 = L;  // 0 dB per tone before averaging
    const auto rx = record(cfg, static_paths({make_path(0, 0.0, 1.0)}), 24, sigma2, 100 + N);
    const auto H = measure(rx, cfg);
    double noise = 0.0;
    for (double v : H.noise_power) noise += v;
    noise /= static_cast<double>(H.noise_power.size());
    const double gain = power_to_db(1.0 / noise) - power_to_db(L / sigma2);
    CAPTURE(N);
    CHECK(std::abs(gain - 10.0 * std::log10(N)) < 1.0);
    CHECK(gain == doctest::Approx(processing_gain_db(N)).epsilon(0.1));
  }
}

TEST_CASE("decorrelation of plain averaging follows the Dirichlet kernel") {
  const auto cfg = single_tx(212);
  const double T = cfg.sequence_period_s;
  const int N = cfg.averaging_count;
  for (double nu : {700.0, 1404.47, 2808.94}) {
    const auto rx = record(cfg, moving_path(cfg, 100e-9, nu), 2);
    const auto plain = demultiplex(plain_average(rx, cfg, 0.0, 0), cfg, make_tone_plan(cfg, 0));
    const auto tracked = measure(rx, cfg);
    const double analytic = std::abs(std::sin(kPi * nu * N * T) / (N * std::sin(kPi * nu * T)));
    CAPTURE(nu);
    const double loss = -20.0 * std::log10(plain.values.row(0).cwiseAbs().mean());
    CHECK(std::abs(loss + 20.0 * std::log10(analytic)) < 0.05);
    CHECK(std::abs(20.0 * std::log10(tracked.values.row(0).cwiseAbs().mean())) < 0.05);
    CHECK(std::abs(tracked.doppler_hz[0] - nu) < 1.0);
  }
  // at the maximum Doppler the loss is a few dB, not negligible
  const double nu_max = max_doppler_hz(14.0, cfg.center_frequency_hz);
  const double a = std::abs(std::sin(kPi * nu_max * N * T) / (N * std::sin(kPi * nu_max * T)));
  CHECK(-20.0 * std::log10(a) == doctest::Approx(3.9).epsilon(0.05));
}

TEST_CASE("tracked averaging keeps the Doppler phase progression") {
  const auto cfg = single_tx(212);
  const double nu = 1500.0;
  const auto H = measure(record(cfg, moving_path(cfg, 50e-9, nu), 6), cfg);
  for (int q = 1; q < 6; ++q) {
    const double dphi = std::arg(H.values(q, 10) * std::conj(H.values(q - 1, 10)));
    const double want = std::remainder(kTwoPi * nu * cfg.snapshot_time_s, kTwoPi);
    CHECK(std::abs(std::remainder(dphi - want, kTwoPi)) < 1e-3);
  }
}

TEST_CASE("plain averaging and demultiplexing are linear") {
  const auto cfg = single_tx(8);
  const auto x1 = record(cfg, moving_path(cfg, 20e-9, 900.0, 0.7), 3, 0.1, 1, 500.0);
  const auto x2 = record(cfg, static_paths({make_path(0, 55e-9, Complex(0.0, 1.0))}), 3, 0.2, 2, 500.0);
  const Complex a(1.5, -0.5), b(-0.25, 2.0);
  SampledSignal mix = x1;
  for (std::size_t n = 0; n < mix.size(); ++n) mix.samples[n] = a * x1.samples[n] + b * x2.samples[n];
  auto H = [&](const SampledSignal& s) {
    return demultiplex(plain_average(s, cfg, 500.0, 0), cfg, make_tone_plan(cfg, 0)).values;
  };
  CHECK((H(mix) - (a * H(x1) + b * H(x2))).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("LOS delay alignment") {
  const auto cfg = single_tx(4);
  const auto sc = default_drive_by();
  const double tau_los = (sc.tx_start_position - sc.rx_position).norm() / kSpeedOfLight;
  const double step = 1.0 / (cfg.tone_count * cfg.tone_spacing_hz);
  const auto H = measure(record(cfg, static_paths({make_path(0, tau_los, 1.0), make_path(1, tau_los + 2 * step, 0.5)}), 1),
                         cfg);
  const auto A = align_los_delay(H, sc);
  CHECK((A.values.cwiseAbs() - H.values.cwiseAbs()).cwiseAbs().maxCoeff() < 1e-12);

  std::vector<double> profile;
  for (int n = 0; n < cfg.tone_count; ++n) {
    profile.push_back(delay_bin_power(A.values.row(0), A.tone_frequencies_hz, cfg.tone_spacing_hz, n));
  }
  const auto top = std::max_element(profile.begin(), profile.end()) - profile.begin();
  CHECK(top == 0);
  // the echo keeps its two-bin separation and relative power
  CHECK(profile[2] / profile[0] == doctest::Approx(0.25).epsilon(1e-6));
  CHECK(profile[1] < 1e-12 * profile[0]);
}

TEST_CASE("SNR estimate") {
  SUBCASE("planted 30 dB") {
    const auto cfg = single_tx(212);
    const int L = cfg.samples_per_period();
    const double sigma2 = 212.0 * L / 1000.0;
    const auto H = measure(record(cfg, static_paths({make_path(0, 0.0, 1.0)}), 30, sigma2, 9), cfg);
    CHECK(std::abs(median_of(snr_per_tx(H, H.noise_power)) - 30.0) < 0.5);
  }
  SUBCASE("pure noise reads about 0 dB") {
    const auto cfg = single_tx(4);
    const auto rx = record(cfg, static_paths({}), 200, 1.0, 11);
    const auto H = demultiplex(plain_average(rx, cfg, 0.0, 0), cfg, make_tone_plan(cfg, 0));
    double mean_lin = 0.0;
    for (double s : snr_per_tx(H, H.noise_power)) mean_lin += db_to_power(s);
    CHECK(std::abs(power_to_db(mean_lin / 200.0)) < 0.5);
  }
  SUBCASE("zero noise estimate") {
    TransferFunctionGrid H;
    H.values = Eigen::MatrixXcd::Ones(2, 3);
    const std::vector<double> noise{1.0, 0.0};
    CHECK_THROWS_AS(snr_per_tx(H, noise), DomainError);
    CHECK_THROWS_AS(snr_per_tx(H, std::vector<double>{1.0}), ShapeError);
  }
}

TEST_CASE("serial and parallel averaging agree bit for bit") {
  const auto cfg = single_tx(64);
  const auto rx = record(cfg, moving_path(cfg, 10e-9, 2000.0), 8, 0.5, 12);
  const auto a = coherent_average(rx, cfg, 0.0, 0, Execution::Serial);
  const auto b = coherent_average(rx, cfg, 0.0, 0, Execution::Parallel);
  CHECK(a.periods == b.periods);
  CHECK(a.doppler_hz == b.doppler_hz);
}

TEST_CASE("cross-talk between transmitters under Doppler") {
  auto cfg = reference_config();
  const double nu = 2808.0;
  const double fc = cfg.center_frequency_hz;
  auto paths = [&](bool tx0_on) {
    return PathFunction([=](double t, int tx) {
      if (tx == 0 && !tx0_on) return std::vector<Path>{};
      return std::vector<Path>{make_path(0, 80e-9 - nu * t / fc, 1.0, nu)};
    });
  };
  const auto both = measure(record(cfg, paths(true), 2), cfg, 1);
  const auto alone = measure(record(cfg, paths(false), 2), cfg, 1);
  const double leak = (both.values - alone.values).squaredNorm() / alone.values.squaredNorm();
  CHECK(power_to_db(leak) < -60.0);
}

TEST_CASE("input checks") {
  const auto cfg = single_tx(4);
  const auto rx = record(cfg, static_paths({}), 1);
  SampledSignal shortrec = rx;
  shortrec.samples.resize(100);
  CHECK_THROWS_AS(coherent_average(shortrec, cfg, 0.0, 0), ShapeError);
  SampledSignal wrong = rx;
  wrong.sample_rate_hz = 1e6;
  CHECK_THROWS_AS(coherent_average(wrong, cfg, 0.0, 0), ConfigError);
}
