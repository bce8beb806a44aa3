#pragma once

#include <filesystem>
#include <string>

#include "dds/channel.hpp"
#include "dds/params.hpp"
#include "dds/sbl.hpp"
#include "dds/tfanalysis.hpp"

namespace dds {

/// Sounder and evaluation settings from one INI file with sections
/// [sounder], [lsf], [sbl]. Missing sections keep the reference defaults.
struct RunConfig {
  SounderConfig sounder = reference_config();
  LSFConfig lsf;
  SBLConfig sbl;
  double sbl_peak_threshold = 25.0;  // reported SBL peaks need gamma >= threshold * noise_var
};

/// Scenario INI: [scenario] plus optional [beam.N] and [reflector.NAME]
/// sections applied on top of the default drive-by.
struct ScenarioFile {
  ScenarioConfig scenario = default_drive_by();
  double standstill_s = 0.01;  // length of the CFO calibration record
};

/// Throws ConfigError naming the offending key, or with the line number on a
/// syntax error; IoError if the file cannot be read.
RunConfig load_run_config(const std::filesystem::path& path);
RunConfig parse_run_config(const std::string& text, const std::string& name = "<config>");

ScenarioFile load_scenario(const std::filesystem::path& path);
ScenarioFile parse_scenario(const std::string& text, const std::string& name = "<scenario>");

}  // namespace dds
