#include "dds/channel.hpp"


#include <algorithm>
#include <cmath>
#include <random>

#include "dds/fft.hpp"

namespace dds {
namespace {

constexpr double kDeg = kPi / 180.0;
constexpr double kMaxExcessPathM = 16.0;

struct Direction {
  double azimuth_deg;
  double elevation_deg;
};

Direction departure_direction(const Eigen::Vector3d& velocity, const Eigen::Vector3d& d) {
  Eigen::Vector2d heading(velocity.x(), velocity.y());
  if (heading.norm() < 1e-12) heading = Eigen::Vector2d::UnitX();
  heading.normalize();
  const Eigen::Vector2d dh(d.x(), d.y());
  const double az = std::atan2(heading.x() * dh.y() - heading.y() * dh.x(), heading.dot(dh));
  const double el = std::atan2(d.z(), dh.norm());
  return {az / kDeg, el / kDeg};
}

double path_amplitude(double gain_tx_db, double gain_rx_db, double length_m, double fc, double loss_db) {
  const double db = gain_tx_db + gain_rx_db - free_space_path_loss_db(length_m, fc) - loss_db;
  return std::pow(10.0, db / 20.0);
}

const BeamPattern& beam_for(const ScenarioConfig& sc, int tx_index) {
  if (tx_index < 0 || tx_index >= static_cast<int>(sc.tx_beams.size())) {
    throw ConfigError("no beam pattern configured for TX " + std::to_string(tx_index));
  }
  return sc.tx_beams[static_cast<std::size_t>(tx_index)];
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Per-TX period spectrum: nonzero bins with their signed frequencies.
struct PeriodSpectrum {
  int length = 0;
  std::vector<int> bins;
  std::vector<double> freqs_hz;
  std::vector<Complex> coeffs;  // X[b] / L
};

PeriodSpectrum analyse_period(const SampledSignal& period) {
  PeriodSpectrum ps;
  ps.length = static_cast<int>(period.size());
  std::vector<Complex> X(period.size());
  fft::forward(period.samples, X);
  double peak = 0.0;
  for (const auto& x : X) peak = std::max(peak, std::abs(x));
  for (int b = 0; b < ps.length; ++b) {
    if (std::abs(X[static_cast<std::size_t>(b)]) <= 1e-13 * peak) continue;
    const int signed_bin = (2 * b > ps.length) ? b - ps.length : b;
    ps.bins.push_back(b);
    ps.freqs_hz.push_back(signed_bin * period.sample_rate_hz / ps.length);
    ps.coeffs.push_back(X[static_cast<std::size_t>(b)] / static_cast<double>(ps.length));
  }
  return ps;
}

struct ChunkPath {
  Complex gain;
  double tau_start;  // delay at chunk start
  double tau_slope;  // d tau / d t
  double tau_mid;
};

// Paths visible at the chunk centre, with delays linear between the chunk ends.
std::vector<ChunkPath> chunk_paths(const PathFunction& fn, int tx, double ta, double tb) {
  const double tm = 0.5 * (ta + tb);
  const auto mid = fn(tm, tx);
  const auto start = fn(ta, tx);
  const auto end = fn(tb, tx);
  auto find = [](const std::vector<Path>& v, int id) -> const Path* {
    for (const auto& p : v)
      if (p.id == id) return &p;
    return nullptr;
  };
  std::vector<ChunkPath> out;
  for (const auto& p : mid) {
    if (!p.visible) continue;
    const Path* a = find(start, p.id);
    const Path* b = find(end, p.id);
    const double tau_a = a ? a->delay_s : p.delay_s;
    const double tau_b = b ? b->delay_s : p.delay_s;
    out.push_back({p.gain, tau_a, (tau_b - tau_a) / (tb - ta), p.delay_s});
  }
  return out;
}

void check_inputs(std::span<const SampledSignal> tx_periods, const SynthesisParams& p) {
  if (tx_periods.empty()) throw ConfigError("no TX waveforms given");
  for (const auto& s : tx_periods) {
    if (s.sample_rate_hz != p.sample_rate_hz) throw ConfigError("TX waveform sample rate differs from the RX rate");
    if (s.samples.empty()) throw ConfigError("empty TX waveform");
  }
  if (p.length <= 0) throw ConfigError("empty record: duration must be positive");
  if (p.chunk_samples <= 0) throw ConfigError("chunk length must be positive");
}

// Synthesizes absolute samples [lo, hi) of chunk `chunk` into out[lo - start].
void synthesize_chunk(const std::vector<PeriodSpectrum>& spectra, const PathFunction& fn,
                      const SynthesisParams& p, std::int64_t chunk, Complex* out) {
  const std::int64_t c0 = chunk * p.chunk_samples;
  const std::int64_t c1 = c0 + p.chunk_samples;
  const std::int64_t lo = std::max(c0, p.start_sample);
  const std::int64_t hi = std::min(c1, p.start_sample + p.length);
  const double fs = p.sample_rate_hz;
  const double ta = static_cast<double>(c0) / fs;
  const double tb = static_cast<double>(c1) / fs;

  std::vector<Complex> delayed;
  std::vector<Complex> spec;
  for (std::size_t tx = 0; tx < spectra.size(); ++tx) {
    const PeriodSpectrum& ps = spectra[tx];
    const int L = ps.length;
    delayed.assign(static_cast<std::size_t>(L), Complex{});
    spec.assign(static_cast<std::size_t>(L), Complex{});
    for (const ChunkPath& cp : chunk_paths(fn, static_cast<int>(tx), ta, tb)) {
      // Envelope: periodic band-limited delay by tau_mid via a spectral phase ramp.
      std::fill(spec.begin(), spec.end(), Complex{});
      for (std::size_t i = 0; i < ps.bins.size(); ++i) {
        spec[static_cast<std::size_t>(ps.bins[i])] =
            cp.gain * ps.coeffs[i] * std::polar(1.0, -kTwoPi * ps.freqs_hz[i] * cp.tau_mid);
      }
      fft::backward(spec, delayed);

      // Carrier phase -2 pi fc tau(t), tau linear in t: anchored exactly at every
      // period start and advanced by a constant per-sample rotation.
      const Complex step = std::polar(1.0, -kTwoPi * p.center_frequency_hz * cp.tau_slope / fs);
      for (std::int64_t s = lo; s < hi;) {
        const std::int64_t run_end = std::min(hi, (s / L + 1) * L);
        const double t = static_cast<double>(s) / fs;
        Complex phasor = std::polar(1.0, -kTwoPi * p.center_frequency_hz * (cp.tau_start + cp.tau_slope * (t - ta)));
        std::int64_t idx = s % L;
        for (; s < run_end; ++s, ++idx) {
          out[s - p.start_sample] += delayed[static_cast<std::size_t>(idx)] * phasor;
          phasor *= step;
        }
      }
    }
  }

  if (p.cfo_hz != 0.0) {
    const Complex step = std::polar(1.0, kTwoPi * p.cfo_hz / fs);
    const std::int64_t block = 1024;
    for (std::int64_t s = lo; s < hi;) {
      const std::int64_t run_end = std::min(hi, s + block);
      Complex phasor = std::polar(1.0, kTwoPi * p.cfo_hz * static_cast<double>(s) / fs);
      for (; s < run_end; ++s) {
        out[s - p.start_sample] *= phasor;
        phasor *= step;
      }
    }
  }

  if (p.noise_power > 0.0) {
    std::mt19937_64 rng(splitmix64(p.seed ^ splitmix64(static_cast<std::uint64_t>(chunk))));
    std::normal_distribution<double> normal(0.0, std::sqrt(0.5 * p.noise_power));
    for (std::int64_t s = c0; s < hi; ++s) {
      const double re = normal(rng);
      const double im = normal(rng);
      if (s >= lo) out[s - p.start_sample] += Complex(re, im);
    }
  }
}

}  // namespace

double horn_gain_db(const BeamPattern& beam, double azimuth_deg, double elevation_deg) {
  const double el = elevation_deg * kDeg;
  const double el0 = beam.boresight_elevation_deg * kDeg;
  const double daz = (azimuth_deg - beam.boresight_azimuth_deg) * kDeg;
  const double c = std::clamp(std::cos(el) * std::cos(el0) * std::cos(daz) + std::sin(el) * std::sin(el0), -1.0, 1.0);
  const double theta_deg = std::acos(c) / kDeg;
  const double half = 0.5 * beam.beamwidth_3db_deg;
  return std::max(beam.floor_dbi, beam.gain_dbi - 3.0 * (theta_deg / half) * (theta_deg / half));
}

const char* to_string(PathKind kind) {
  switch (kind) {
    case PathKind::Los: return "los";
    case PathKind::Wall: return "wall";
    case PathKind::Truck: return "truck";
    case PathKind::Ground: return "ground";
  }
  return "unknown";
}

ScenarioConfig default_drive_by() {
  ScenarioConfig sc;
  const double half = 0.5 * sc.canyon_width_m;
  // Canyon walls end at the crossroads (x = -8 m).
  sc.reflectors.push_back({"wall_left", PathKind::Wall, {-80.0, -half, 0.0}, {72.0, 0.0, 0.0}, {0.0, 0.0, 20.0}, 6.0, true});
  sc.reflectors.push_back({"wall_right", PathKind::Wall, {-80.0, half, 0.0}, {72.0, 0.0, 0.0}, {0.0, 0.0, 20.0}, 6.0, true});
  // Parked truck at the curb; its side faces the lane.
  sc.reflectors.push_back({"truck", PathKind::Truck, {-28.0, -6.0, 0.5}, {16.0, 0.0, 0.0}, {0.0, 0.0, 3.5}, 6.0, true});
  sc.reflectors.push_back({"street", PathKind::Ground, {-80.0, -half, 0.0}, {90.0, 0.0, 0.0}, {0.0, 2.0 * half, 0.0}, 6.0, true});
  sc.tx_beams = {BeamPattern{0.0}, BeamPattern{15.0}};
  return sc;
}

std::vector<Path> scenario_paths_all(const ScenarioConfig& sc, const SounderConfig& cfg, double t, int tx_index) {
  const BeamPattern& beam = beam_for(sc, tx_index);
  const double fc = cfg.center_frequency_hz;
  const Eigen::Vector3d tx = sc.tx_position(t);
  const Eigen::Vector3d& rx = sc.rx_position;
  const Eigen::Vector3d& v = sc.tx_velocity;

  std::vector<Path> paths;
  {
    const Eigen::Vector3d d = rx - tx;
    const double len = d.norm();
    const Direction dir = departure_direction(v, d);
    Path los;
    los.id = 0;
    los.kind = PathKind::Los;
    los.delay_s = len / kSpeedOfLight;
    los.doppler_hz = d.dot(v) / len * fc / kSpeedOfLight;  // -(d/dt)|tx - rx| fc / c
    los.gain = path_amplitude(horn_gain_db(beam, dir.azimuth_deg, dir.elevation_deg), sc.rx_gain_dbi, len, fc, 0.0);
    los.departure_azimuth_deg = dir.azimuth_deg;
    los.departure_elevation_deg = dir.elevation_deg;
    paths.push_back(los);
  }

  for (std::size_t r = 0; r < sc.reflectors.size(); ++r) {
    const Reflector& refl = sc.reflectors[r];
    if (!refl.enabled) continue;
    const Eigen::Vector3d n = refl.edge_u.cross(refl.edge_v).normalized();
    const double s_tx = (tx - refl.origin).dot(n);
    const double s_rx = (rx - refl.origin).dot(n);
    const Eigen::Vector3d image = rx - 2.0 * s_rx * n;
    const Eigen::Vector3d d = image - tx;
    const double len = d.norm();

    bool visible = s_tx * s_rx > 0.0;
    Eigen::Vector3d hit = tx;
    if (visible) {
      hit = tx + (s_tx / (s_tx + s_rx)) * d;
      const Eigen::Vector3d rel = hit - refl.origin;
      const double a = rel.dot(refl.edge_u) / refl.edge_u.squaredNorm();
      const double b = rel.dot(refl.edge_v) / refl.edge_v.squaredNorm();
      visible = a >= 0.0 && a <= 1.0 && b >= 0.0 && b <= 1.0;
    }
    const Direction dir = departure_direction(v, visible ? Eigen::Vector3d(hit - tx) : d);
    Path p;
    p.id = static_cast<int>(r) + 1;
    p.kind = refl.kind;
    p.delay_s = len / kSpeedOfLight;
    p.doppler_hz = d.dot(v) / len * fc / kSpeedOfLight;
    // Reflection coefficient: loss with a pi phase flip.
    p.gain = -path_amplitude(horn_gain_db(beam, dir.azimuth_deg, dir.elevation_deg), sc.rx_gain_dbi, len, fc,
                             refl.loss_db);
    p.departure_azimuth_deg = dir.azimuth_deg;
    p.departure_elevation_deg = dir.elevation_deg;
    p.visible = visible;
    paths.push_back(p);
  }
  return paths;
}

PathSet scenario_paths(const ScenarioConfig& sc, const SounderConfig& cfg, double t, int tx_index) {
  if (t < 0.0 || t > sc.end_time()) throw DomainError("time outside the scenario duration");
  PathSet set;
  set.time_s = t;
  for (auto& p : scenario_paths_all(sc, cfg, t, tx_index)) {
    if (p.visible) set.paths.push_back(p);
  }
  return set;
}

void validate_scenario(const ScenarioConfig& sc, const SounderConfig& cfg) {
  if (!(sc.duration_s > 0.0)) throw ConfigError("empty record: scenario duration must be positive");
  if (sc.capture_start_s < 0.0) throw ConfigError("capture_start must be non-negative");
  if (sc.tx_velocity.norm() > cfg.max_speed_mps * (1.0 + 1e-9)) {
    throw ConfigError("TX speed exceeds the sounder's maximum speed");
  }
  if (sc.end_time() > cfg.recording_time_s * (1.0 + 1e-9)) {
    throw ConfigError("capture extends beyond the recording time");
  }
  if (static_cast<int>(sc.tx_beams.size()) < cfg.tx_count) throw ConfigError("fewer beam patterns than TXs");
  if ((sc.rx_position - sc.tx_start_position).norm() < 1e-3) throw ConfigError("TX starts at the RX position");
  const double step = 0.01;
  for (double t = 0.0; t <= sc.end_time() + 1e-12; t += step) {
    const auto paths = scenario_paths_all(sc, cfg, t, 0);
    const double los = paths.front().delay_s * kSpeedOfLight;
    for (const auto& p : paths) {
      if (p.visible && p.delay_s * kSpeedOfLight - los > kMaxExcessPathM + 1e-9) {
        throw ConfigError("single-bounce excess path exceeds 16 m at t = " + std::to_string(t) + " s");
      }
    }
  }
}

SampledSignal synthesize(std::span<const SampledSignal> tx_periods, const PathFunction& paths,
                         const SynthesisParams& params, Execution exec) {
  check_inputs(tx_periods, params);
  std::vector<PeriodSpectrum> spectra;
  for (const auto& s : tx_periods) spectra.push_back(analyse_period(s));

  SampledSignal rx;
  rx.sample_rate_hz = params.sample_rate_hz;
  rx.t0_s = static_cast<double>(params.start_sample) / params.sample_rate_hz;
  rx.samples.assign(static_cast<std::size_t>(params.length), Complex{});

  const std::int64_t first = params.start_sample / params.chunk_samples;
  const std::int64_t last = (params.start_sample + params.length - 1) / params.chunk_samples;
  Complex* out = rx.samples.data();
  for_each_index(last - first + 1, exec,
                 [&](std::int64_t c) { synthesize_chunk(spectra, paths, params, first + c, out); });
  return rx;
}

SampledSignal synthesize_reference(std::span<const SampledSignal> tx_periods, const PathFunction& paths,
                                   const SynthesisParams& params) {
  check_inputs(tx_periods, params);
  const double fs = params.sample_rate_hz;
  SampledSignal rx;
  rx.sample_rate_hz = fs;
  rx.t0_s = static_cast<double>(params.start_sample) / fs;
  rx.samples.assign(static_cast<std::size_t>(params.length), Complex{});

  std::vector<PeriodSpectrum> spectra;
  for (const auto& s : tx_periods) spectra.push_back(analyse_period(s));

  for (std::int64_t i = 0; i < params.length; ++i) {
    const std::int64_t s = params.start_sample + i;
    const std::int64_t chunk = s / params.chunk_samples;
    const double ta = static_cast<double>(chunk * params.chunk_samples) / fs;
    const double tb = static_cast<double>((chunk + 1) * params.chunk_samples) / fs;
    const double t = static_cast<double>(s) / fs;
    Complex acc{};
    for (std::size_t tx = 0; tx < spectra.size(); ++tx) {
      const auto mid = paths(0.5 * (ta + tb), static_cast<int>(tx));
      const auto start = paths(ta, static_cast<int>(tx));
      const auto end = paths(tb, static_cast<int>(tx));
      for (const auto& p : mid) {
        if (!p.visible) continue;
        double tau_a = p.delay_s, tau_b = p.delay_s;
        for (const auto& q : start)
          if (q.id == p.id) tau_a = q.delay_s;
        for (const auto& q : end)
          if (q.id == p.id) tau_b = q.delay_s;
        const double tau = tau_a + (tau_b - tau_a) * (t - ta) / (tb - ta);
        Complex env{};
        const PeriodSpectrum& ps = spectra[tx];
        for (std::size_t k = 0; k < ps.bins.size(); ++k) {
          // exp(j 2 pi f (t - tau)) with f t reduced through the bin index.
          const double phase = kTwoPi * (static_cast<double>((ps.bins[k] * (s % ps.length)) % ps.length) / ps.length -
                                          ps.freqs_hz[k] * p.delay_s);
          env += ps.coeffs[k] * std::polar(1.0, phase);
        }
        acc += p.gain * env * std::polar(1.0, -kTwoPi * params.center_frequency_hz * tau);
      }
    }
    rx.samples[static_cast<std::size_t>(i)] = acc * std::polar(1.0, kTwoPi * params.cfo_hz * t);
  }
  return rx;
}

SampledSignal apply_channel(std::span<const SampledSignal> tx_periods, const ScenarioConfig& sc,
                            const SounderConfig& cfg, std::uint64_t seed, Execution exec) {
  validate_scenario(sc, cfg);
  for (const auto& s : tx_periods) {
    if (s.sample_rate_hz != cfg.sample_rate_hz) throw ConfigError("TX waveform sample rate differs from the sounder's");
  }
  SynthesisParams p;
  p.center_frequency_hz = cfg.center_frequency_hz;
  p.sample_rate_hz = cfg.sample_rate_hz;
  p.start_sample = std::llround(sc.capture_start_s * cfg.sample_rate_hz);
  p.length = std::llround(sc.duration_s * cfg.sample_rate_hz);
  p.chunk_samples = cfg.samples_per_snapshot();
  p.cfo_hz = sc.cfo_hz;
  p.noise_power = db_to_power(sc.noise_power_db);
  p.seed = seed;
  const PathFunction fn = [&sc, &cfg](double t, int tx) { return scenario_paths_all(sc, cfg, t, tx); };
  return synthesize(tx_periods, fn, p, exec);
}

SampledSignal standstill_record(std::span<const SampledSignal> tx_periods, const ScenarioConfig& sc,
                                const SounderConfig& cfg, double duration_s, std::uint64_t seed) {
  ScenarioConfig parked = sc;
  parked.tx_velocity = Eigen::Vector3d::Zero();
  SynthesisParams p;
  p.center_frequency_hz = cfg.center_frequency_hz;
  p.sample_rate_hz = cfg.sample_rate_hz;
  p.start_sample = 0;
  p.length = std::llround(duration_s * cfg.sample_rate_hz);
  p.chunk_samples = cfg.samples_per_snapshot();
  p.cfo_hz = sc.cfo_hz;
  p.noise_power = db_to_power(sc.noise_power_db);
  // Distinct noise stream from the drive-by record.
  p.seed = splitmix64(seed ^ 0x5354414E44535449ULL);
  const PathFunction fn = [&parked, &cfg](double t, int tx) { return scenario_paths_all(parked, cfg, t, tx); };
  return synthesize(tx_periods, fn, p, Execution::Parallel);
}

}  // namespace dds
