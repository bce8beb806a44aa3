#include <doctest.h>

#include "dds/config_file.hpp"

using namespace dds;

namespace {
const std::filesystem::path kConfigs = DDS_CONFIG_DIR;
}

TEST_CASE("shipped configs load") {
  const auto rc = load_run_config(kConfigs / "reference.ini");
  const auto ref = reference_config();
  CHECK(rc.sounder.tone_count == ref.tone_count);
  CHECK(rc.sounder.tone_spacing_hz == doctest::Approx(ref.tone_spacing_hz));
  CHECK(rc.sounder.snapshot_time_s == doctest::Approx(ref.snapshot_time_s));
  CHECK(rc.sounder.averaging_count == 212);
  CHECK(rc.lsf.window_length == 360);
  CHECK(rc.lsf.tone_count == 21);
  CHECK(rc.sbl.U == 4);
  CHECK(rc.sbl.P == 10);
  CHECK(rc.sbl_peak_threshold == 25.0);
  CHECK(validate_config(rc.sounder).pass());

  const auto tau = load_run_config(kConfigs / "tau200.ini");
  CHECK(tau.sounder.max_excess_delay_s == doctest::Approx(200e-9));
  CHECK_FALSE(validate_config(tau.sounder).pass());

  const auto drive = load_scenario(kConfigs / "drive_by.ini");
  CHECK_NOTHROW(validate_scenario(drive.scenario, rc.sounder));
  CHECK(drive.scenario.tx_velocity.x() == doctest::Approx(14.0));
  const auto desk = load_scenario(kConfigs / "desk.ini");
  CHECK(desk.scenario.duration_s == doctest::Approx(0.12822));
  CHECK(desk.standstill_s == doctest::Approx(0.01));
}

TEST_CASE("empty text keeps the defaults") {
  const auto rc = parse_run_config("");
  CHECK(rc.sounder.averaging_count == reference_config().averaging_count);
  const auto sf = parse_scenario("; nothing\n");
  CHECK(sf.scenario.reflectors.size() == default_drive_by().reflectors.size());
}

TEST_CASE("values are parsed and applied") {
  const auto rc = parse_run_config("[lsf]\nwindow_length = 32\nnw = 2.5\n[sbl]\nP = 4\nupsampling = 2\npeak_threshold=10\n");
  CHECK(rc.lsf.window_length == 32);
  CHECK(rc.lsf.nw == 2.5);
  CHECK(rc.sbl.P == 4);
  CHECK(rc.sbl.U == 2);
  CHECK(rc.sbl_peak_threshold == 10.0);

  const auto sf = parse_scenario(
      "[scenario]\ntx_velocity = 7, 0, 0\ncfo_hz = -50\n"
      "[beam.1]\nelevation_deg = 20\n"
      "[reflector.truck]\nenabled = false\n"
      "[reflector.kiosk]\nkind = wall\norigin = -20 -9 0\nedge_u = 4 0 0\nedge_v = 0 0 3\nloss_db = 3\n");
  CHECK(sf.scenario.tx_velocity.x() == 7.0);
  CHECK(sf.scenario.cfo_hz == -50.0);
  CHECK(sf.scenario.tx_beams[1].boresight_elevation_deg == 20.0);
  const auto& refl = sf.scenario.reflectors;
  CHECK(refl.size() == default_drive_by().reflectors.size() + 1);
  for (const auto& r : refl) {
    if (r.name == "truck") CHECK_FALSE(r.enabled);
    if (r.name == "kiosk") {
      CHECK(r.kind == PathKind::Wall);
      CHECK(r.origin.y() == -9.0);
      CHECK(r.loss_db == 3.0);
    }
  }
}

TEST_CASE("errors name the key or line") {
  CHECK_THROWS_WITH_AS(parse_run_config("[sounder]\ntone_cout = 21\n", "run.ini"),
                       doctest::Contains("unknown key 'sounder.tone_cout'"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_run_config("[sounder]\ntone_count = many\n", "run.ini"),
                       doctest::Contains("tone_count"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_run_config("[sounder]\ntone_count = 2.5\n"), doctest::Contains("not an integer"),
                       ConfigError);
  CHECK_THROWS_WITH_AS(parse_run_config("[sounder\nx=1\n", "run.ini"), doctest::Contains("run.ini:1"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_run_config("[radar]\nx = 1\n"), doctest::Contains("unknown section 'radar'"),
                       ConfigError);
  CHECK_THROWS_WITH_AS(parse_run_config("x = 1\n"), doctest::Contains("outside any section"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_scenario("[scenario]\nrx_position = 1 2\n"), doctest::Contains("three numbers"),
                       ConfigError);
  CHECK_THROWS_WITH_AS(parse_scenario("[reflector.a]\nkind = mirror\n"), doctest::Contains("mirror"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_scenario("[beam.x]\ngain_dbi = 1\n"), doctest::Contains("beam.x"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_scenario("[reflector.a]\nenabled = maybe\n"), doctest::Contains("boolean"), ConfigError);
  CHECK_THROWS_AS(load_run_config(kConfigs / "nope.ini"), IoError);
}
