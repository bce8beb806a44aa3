#include "dds/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace dds {

std::vector<SampledSignal> tx_waveforms(const SounderConfig& cfg) {
  std::vector<SampledSignal> out;
  for (int i = 0; i < cfg.tx_count; ++i) out.push_back(multitone_waveform(cfg, make_tone_plan(cfg, i)));
  return out;
}

SimulationOutput simulate(const ScenarioFile& sf, const SounderConfig& cfg, std::uint64_t seed, Execution exec) {
  if (!(sf.standstill_s > 0.0)) throw ConfigError("standstill_s must be positive");
  const auto tx = tx_waveforms(cfg);
  SimulationOutput out;
  out.rx = apply_channel(tx, sf.scenario, cfg, seed, exec);
  out.standstill = standstill_record(tx, sf.scenario, cfg, sf.standstill_s, seed);
  return out;
}

std::string truth_csv(const ScenarioConfig& sc, const SounderConfig& cfg, std::uint64_t seed) {
  const std::int64_t snap = cfg.samples_per_snapshot();
  const std::int64_t start = std::llround(sc.capture_start_s * cfg.sample_rate_hz);
  const std::int64_t Q = std::llround(sc.duration_s * cfg.sample_rate_hz) / snap;
  std::string out = "# seed " + std::to_string(seed) + "\n";
  out += "time_s,tx,path_id,kind,delay_s,excess_delay_s,doppler_hz,gain_db,phase_rad\n";
  char line[256];
  for (std::int64_t q = 0; q < Q; ++q) {
    const double t = (static_cast<double>(start + q * snap) + 0.5 * static_cast<double>(snap - 1)) / cfg.sample_rate_hz;
    for (int tx = 0; tx < cfg.tx_count; ++tx) {
      const PathSet ps = scenario_paths(sc, cfg, t, tx);
      const double los = ps.paths.front().delay_s;
      for (const auto& p : ps.paths) {
        std::snprintf(line, sizeof line, "%.9f,%d,%d,%s,%.12e,%.12e,%.6f,%.6f,%.6f\n", t, tx, p.id, to_string(p.kind),
                      p.delay_s, p.delay_s - los, p.doppler_hz, power_to_db(std::norm(p.gain)), std::arg(p.gain));
        out += line;
      }
    }
  }
  return out;
}

ProcessOutput process(const SampledSignal& rx, const SampledSignal& standstill, const ScenarioConfig& sc,
                      const SounderConfig& cfg, Execution exec) {
  const auto tx = tx_waveforms(cfg);
  SampledSignal ref = tx.front();
  for (std::size_t i = 1; i < tx.size(); ++i) {
    for (std::size_t n = 0; n < ref.size(); ++n) ref.samples[n] += tx[i].samples[n];
  }
  ProcessOutput out;
  out.cfo_hz = estimate_cfo(standstill, ref);
  for (int i = 0; i < cfg.tx_count; ++i) {
    const TonePlan plan = make_tone_plan(cfg, i);
    const AveragedSnapshots avg = coherent_average(rx, cfg, out.cfo_hz, i, exec);
    TransferFunctionGrid H = align_los_delay(demultiplex(avg, cfg, plan), sc);
    out.snr_db.push_back(snr_per_tx(H, H.noise_power));
    out.H.push_back(std::move(H));
  }
  return out;
}

GridAxes native_axes(const SounderConfig& cfg, double window_start_s) {
  return GridAxes{cfg.tone_spacing_hz, cfg.snapshot_time_s, 1, window_start_s};
}

WindowAnalysis analyze_window(const Eigen::MatrixXcd& window, const RunConfig& cfg, const GridAxes& axes,
                              Execution exec) {
  WindowAnalysis wa;
  wa.start_s = axes.window_start_s;
  LSFConfig lc = cfg.lsf;
  lc.tone_count = static_cast<int>(window.rows());
  lc.window_length = static_cast<int>(window.cols());
  wa.lsf = normalized(lsf_estimate(window, lc, axes, exec));
  wa.dsd = dsd(wa.lsf);
  wa.lsf_peaks = top_peaks_2d(wa.lsf, cfg.sbl.P);

  const SparseModel model(lc.tone_count, lc.window_length, cfg.sbl.U);
  GridAxes sa = axes;
  sa.delay_upsampling = cfg.sbl.U;
  const double power = window.squaredNorm() / static_cast<double>(window.size());
  const double scale = power > 0.0 ? std::sqrt(power) : 1.0;
  wa.sbl = sbl_fit(window / scale, model, cfg.sbl, sa, exec);
  const double s2 = scale * scale;
  wa.sbl.gamma.values *= s2;
  wa.sbl.noise_var *= s2;
  wa.sbl.mean *= scale;
  for (auto& r : wa.sbl.residual_history) r *= scale;
  for (auto& p : wa.sbl.active_peaks) p.power *= s2;
  for (const auto& p : wa.sbl.active_peaks) {
    if (p.power >= cfg.sbl_peak_threshold * wa.sbl.noise_var) wa.sbl_peaks.push_back(p);
  }
  return wa;
}

std::vector<WindowAnalysis> analyze(const TransferFunctionGrid& H, std::span<const double> snr_db, const RunConfig& cfg,
                                    int max_windows, Execution exec) {
  const int M = cfg.lsf.window_length;
  if (M < 1) throw ConfigError("window_length must be >= 1");
  if (snr_db.size() != static_cast<std::size_t>(H.snapshots())) throw ShapeError("one SNR value per snapshot required");
  int windows = H.snapshots() / M;
  if (windows == 0) {
    throw ShapeError("record has " + std::to_string(H.snapshots()) + " snapshots, fewer than one window of " +
                     std::to_string(M));
  }
  if (max_windows > 0) windows = std::min(windows, max_windows);

  std::vector<WindowAnalysis> out(static_cast<std::size_t>(windows));
  auto one = [&](int w) {
    const int first = w * M;
    const double half_snapshot =
        0.5 * static_cast<double>(cfg.sounder.samples_per_snapshot() - 1) / cfg.sounder.sample_rate_hz;
    const double start = H.snapshot_times_s[static_cast<std::size_t>(first)] - half_snapshot;
    WindowAnalysis wa = analyze_window(extract_window(H, first, M), cfg, native_axes(cfg.sounder, start), exec);
    wa.tx_index = H.tx_index;
    wa.window = w;
    std::vector<double> s(snr_db.begin() + first, snr_db.begin() + first + M);
    std::nth_element(s.begin(), s.begin() + M / 2, s.end());
    wa.median_snr_db = s[static_cast<std::size_t>(M / 2)];
    out[static_cast<std::size_t>(w)] = std::move(wa);
  };
  for_each_index(windows, exec, [&](std::int64_t w) { one(static_cast<int>(w)); });
  return out;
}

}  // namespace dds
