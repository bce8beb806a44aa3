#include <doctest.h>

#include <sstream>

#include "dds/pipeline.hpp"
#include "support.hpp"

using namespace dds;
using namespace dds::testing;

namespace {

RunConfig small_run(int M) {
  RunConfig rc;
  rc.lsf.window_length = M;
  return rc;
}

ScenarioFile short_capture(double start_s, int snapshots) {
  ScenarioFile sf;
  sf.scenario.capture_start_s = start_s;
  sf.scenario.duration_s = snapshots * reference_config().snapshot_time_s;
  sf.standstill_s = 0.01;
  return sf;
}

}  // namespace

TEST_CASE("simulate and process a short capture") {
  const RunConfig rc = small_run(32);
  const ScenarioFile sf = short_capture(0.5, 64);
  const auto sim = simulate(sf, rc.sounder, 11);
  CHECK(sim.rx.size() == static_cast<std::size_t>(64 * rc.sounder.samples_per_snapshot()));
  CHECK(sim.rx.t0_s == doctest::Approx(0.5).epsilon(1e-9));

  const auto po = process(sim.rx, sim.standstill, sf.scenario, rc.sounder);
  CHECK(std::abs(po.cfo_hz - sf.scenario.cfo_hz) < 1.0);
  REQUIRE(po.H.size() == 2);
  for (int i = 0; i < 2; ++i) {
    const auto& H = po.H[static_cast<std::size_t>(i)];
    CHECK(H.snapshots() == 64);
    CHECK(H.tones() == 21);
    CHECK(H.tx_index == i);
    CHECK(po.snr_db[static_cast<std::size_t>(i)].size() == 64);
    // LOS Doppler estimate tracks the geometry
    const double t = H.snapshot_times_s[10];
    const double truth = scenario_paths(sf.scenario, rc.sounder, t, i).paths.front().doppler_hz;
    CHECK(std::abs(H.doppler_hz[10] - truth) < 20.0);
  }
  CHECK(median_of(po.snr_db[0]) > 25.0);
}

TEST_CASE("truth table") {
  const auto sf = short_capture(0.0, 3);
  const std::string csv = truth_csv(sf.scenario, reference_config(), 5);
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  CHECK(line == "# seed 5");
  std::getline(in, line);
  CHECK(line == "time_s,tx,path_id,kind,delay_s,excess_delay_s,doppler_hz,gain_db,phase_rad");
  int rows = 0, los = 0;
  while (std::getline(in, line)) {
    ++rows;
    if (line.find(",los,") != std::string::npos) ++los;
  }
  CHECK(los == 3 * 2);
  CHECK(rows > los);
}

TEST_CASE("window analysis of planted taps and of pure noise") {
  const RunConfig rc = small_run(32);
  const SparseModel model(21, 32, rc.sbl.U);
  Eigen::MatrixXcd s = Eigen::MatrixXcd::Zero(84, 32);
  s(8, 3) = 1e-3;
  s(30, 29) = Complex(0.0, 5e-4);  // Doppler -3
  Eigen::MatrixXcd H = model.forward(s);
  const double signal = H.squaredNorm() / static_cast<double>(H.size());
  add_noise(H, signal / db_to_power(25.0), 3);

  const auto wa = analyze_window(H, rc, native_axes(rc.sounder, 1.25));
  CHECK(wa.start_s == 1.25);
  CHECK(wa.lsf.values.sum() == doctest::Approx(1.0));
  CHECK(wa.dsd.size() == 32);
  REQUIRE(wa.sbl_peaks.size() >= 2);
  CHECK(wa.sbl_peaks[0].delay_bin == 8);
  CHECK(wa.sbl_peaks[0].doppler_bin == 3);
  CHECK(wa.sbl_peaks[1].delay_bin == 30);
  CHECK(wa.sbl_peaks[1].doppler_bin == -3);
  // gamma is reported in |H|^2 units of the input
  CHECK(wa.sbl_peaks[0].power == doctest::Approx(1e-6).epsilon(0.2));
  CHECK(wa.sbl.noise_var == doctest::Approx(signal / db_to_power(25.0)).epsilon(0.25));
  for (const auto& p : wa.sbl_peaks) CHECK(p.power >= rc.sbl_peak_threshold * wa.sbl.noise_var);
  REQUIRE(!wa.lsf_peaks.empty());
  CHECK(wa.lsf_peaks[0].delay_bin == 2);
  CHECK(wa.lsf_peaks[0].doppler_bin == 3);

  const auto noise = analyze_window(random_grid(21, 32, 77) * 1e-4, rc, native_axes(rc.sounder));
  CHECK(noise.sbl_peaks.empty());
  CHECK(noise.sbl.active_peaks.size() > 0);
}

TEST_CASE("analyze splits the record into windows") {
  const RunConfig rc = small_run(16);
  TransferFunctionGrid H;
  H.values = random_grid(50, 21, 8);
  for (int q = 0; q < 50; ++q) H.snapshot_times_s.push_back(0.1 + q * rc.sounder.snapshot_time_s);
  std::vector<double> snr(50);
  for (int q = 0; q < 50; ++q) snr[static_cast<std::size_t>(q)] = q;

  const auto all = analyze(H, snr, rc, 0, Execution::Serial);
  REQUIRE(all.size() == 3);
  CHECK(all[1].window == 1);
  CHECK(all[1].median_snr_db == 24.0);
  const double half = 0.5 * (rc.sounder.samples_per_snapshot() - 1) / rc.sounder.sample_rate_hz;
  CHECK(all[2].start_s == doctest::Approx(0.1 + 32 * rc.sounder.snapshot_time_s - half));
  const auto par = analyze(H, snr, rc, 0, Execution::Parallel);
  for (std::size_t w = 0; w < 3; ++w) {
    CHECK(par[w].lsf.values == all[w].lsf.values);
    CHECK(par[w].sbl.gamma.values == all[w].sbl.gamma.values);
  }
  CHECK(analyze(H, snr, rc, 2).size() == 2);
  CHECK_THROWS_AS(analyze(H, std::vector<double>(49), rc, 0), ShapeError);
  CHECK_THROWS_AS(analyze(H, snr, small_run(64), 0), ShapeError);
}

TEST_CASE("simulate rejects a non-positive standstill") {
  auto sf = short_capture(0.0, 2);
  sf.standstill_s = 0.0;
  CHECK_THROWS_AS(simulate(sf, reference_config(), 1), ConfigError);
}
