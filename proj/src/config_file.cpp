#include "dds/config_file.hpp"

#include <algorithm>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <functional>
#include <map>
#include <sstream>

#include "dds/iq_io.hpp"

namespace dds {
namespace {

namespace pt = boost::property_tree;

using Setter = std::function<void(const std::string&)>;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  double out = 0.0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) throw ConfigError("key '" + key + "': not a number: '" + v + "'");
  return out;
}

int to_int(const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  int out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) throw ConfigError("key '" + key + "': not an integer: '" + v + "'");
  return out;
}

bool to_bool(const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("key '" + key + "': not a boolean: '" + v + "'");
}

Eigen::Vector3d to_vec3(const std::string& key, const std::string& raw) {
  std::string v = raw;
  for (char& c : v) {
    if (c == ',') c = ' ';
  }
  std::istringstream ss(v);
  std::string a, b, c, extra;
  if (!(ss >> a >> b >> c) || (ss >> extra)) throw ConfigError("key '" + key + "': expected three numbers");
  return {to_double(key, a), to_double(key, b), to_double(key, c)};
}

PathKind to_kind(const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  if (v == "wall") return PathKind::Wall;
  if (v == "truck") return PathKind::Truck;
  if (v == "ground") return PathKind::Ground;
  throw ConfigError("key '" + key + "': unknown reflector kind '" + v + "'");
}

pt::ptree parse_ini(const std::string& text, const std::string& name) {
  std::istringstream in(text);
  pt::ptree tree;
  try {
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(name + ":" + std::to_string(e.line()) + ": " + e.message());
  }
  return tree;
}

void apply(const pt::ptree& section, const std::string& prefix, const std::map<std::string, Setter>& keys,
           const std::string& name) {
  for (const auto& [key, node] : section) {
    const std::string full = prefix + "." + key;
    const auto it = keys.find(key);
    if (it == keys.end()) throw ConfigError(name + ": unknown key '" + full + "'");
    try {
      it->second(node.data());
    } catch (const ConfigError& e) {
      throw ConfigError(name + ": " + e.what());
    }
  }
}

void reject_top_level_keys(const pt::ptree& tree, const std::string& name) {
  for (const auto& [key, node] : tree) {
    if (node.empty()) throw ConfigError(name + ": key '" + key + "' outside any section");
  }
}

}  // namespace

RunConfig parse_run_config(const std::string& text, const std::string& name) {
  const pt::ptree tree = parse_ini(text, name);
  reject_top_level_keys(tree, name);
  RunConfig rc;
  SounderConfig& s = rc.sounder;
  // d/i/b bind a key to a field with the matching parser.
  auto d = [](const std::string& k, double& f) { return std::pair{k, Setter([k, &f](const std::string& v) { f = to_double(k, v); })}; };
  auto i = [](const std::string& k, int& f) { return std::pair{k, Setter([k, &f](const std::string& v) { f = to_int(k, v); })}; };

  const std::map<std::string, Setter> sounder_keys{
      d("center_frequency_hz", s.center_frequency_hz), d("tone_spacing_hz", s.tone_spacing_hz),
      i("tone_count", s.tone_count),                   i("tx_count", s.tx_count),
      d("tx_tone_offset_hz", s.tx_tone_offset_hz),     d("bandwidth_hz", s.bandwidth_hz),
      d("max_excess_delay_s", s.max_excess_delay_s),   d("sequence_period_s", s.sequence_period_s),
      i("averaging_count", s.averaging_count),         d("snapshot_time_s", s.snapshot_time_s),
      d("max_speed_mps", s.max_speed_mps),             d("max_doppler_hz", s.max_doppler_hz),
      d("recording_time_s", s.recording_time_s),       d("sample_rate_hz", s.sample_rate_hz),
      i("snapshot_count", s.snapshot_count)};
  const std::map<std::string, Setter> lsf_keys{i("window_length", rc.lsf.window_length),
                                               i("tapers_time", rc.lsf.tapers_time),
                                               i("tapers_freq", rc.lsf.tapers_freq), d("nw", rc.lsf.nw)};
  const std::map<std::string, Setter> sbl_keys{i("P", rc.sbl.P),
                                               i("iterations", rc.sbl.iterations),
                                               d("gamma_init", rc.sbl.gamma_init),
                                               d("noise_var_init", rc.sbl.noise_var_init),
                                               i("upsampling", rc.sbl.U),
                                               d("peak_threshold", rc.sbl_peak_threshold)};
  for (const auto& [section, node] : tree) {
    if (section == "sounder") {
      apply(node, section, sounder_keys, name);
    } else if (section == "lsf") {
      apply(node, section, lsf_keys, name);
    } else if (section == "sbl") {
      apply(node, section, sbl_keys, name);
    } else {
      throw ConfigError(name + ": unknown section '" + section + "'");
    }
  }
  rc.lsf.tone_count = s.tone_count;
  return rc;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  return parse_run_config(io::read_file(path), path.string());
}

ScenarioFile parse_scenario(const std::string& text, const std::string& name) {
  const pt::ptree tree = parse_ini(text, name);
  reject_top_level_keys(tree, name);
  ScenarioFile f;
  ScenarioConfig& sc = f.scenario;
  auto d = [](const std::string& k, double& x) { return std::pair{k, Setter([k, &x](const std::string& v) { x = to_double(k, v); })}; };
  auto v3 = [](const std::string& k, Eigen::Vector3d& x) { return std::pair{k, Setter([k, &x](const std::string& v) { x = to_vec3(k, v); })}; };

  const std::map<std::string, Setter> scenario_keys{
      v3("rx_position", sc.rx_position),     v3("tx_start_position", sc.tx_start_position),
      v3("tx_velocity", sc.tx_velocity),     d("canyon_width_m", sc.canyon_width_m),
      d("trigger_distance_m", sc.trigger_distance_m), d("capture_start_s", sc.capture_start_s),
      d("duration_s", sc.duration_s),        d("noise_power_db", sc.noise_power_db),
      d("cfo_hz", sc.cfo_hz),                d("rx_gain_dbi", sc.rx_gain_dbi),
      d("standstill_s", f.standstill_s)};

  for (const auto& [section, node] : tree) {
    if (section == "scenario") {
      apply(node, section, scenario_keys, name);
    } else if (section.rfind("beam.", 0) == 0) {
      int index = 0;
      try {
        index = to_int(section, section.substr(5));
      } catch (const ConfigError&) {
        throw ConfigError(name + ": bad beam section '" + section + "'");
      }
      if (index < 0 || index > 64) throw ConfigError(name + ": beam index out of range in '" + section + "'");
      if (static_cast<int>(sc.tx_beams.size()) <= index) sc.tx_beams.resize(static_cast<std::size_t>(index) + 1);
      BeamPattern& b = sc.tx_beams[static_cast<std::size_t>(index)];
      const std::map<std::string, Setter> beam_keys{
          d("elevation_deg", b.boresight_elevation_deg), d("azimuth_deg", b.boresight_azimuth_deg),
          d("gain_dbi", b.gain_dbi), d("beamwidth_deg", b.beamwidth_3db_deg), d("floor_dbi", b.floor_dbi)};
      apply(node, section, beam_keys, name);
    } else if (section.rfind("reflector.", 0) == 0) {
      const std::string rname = section.substr(10);
      if (rname.empty()) throw ConfigError(name + ": reflector section without a name");
      auto it = std::find_if(sc.reflectors.begin(), sc.reflectors.end(),
                             [&](const Reflector& r) { return r.name == rname; });
      if (it == sc.reflectors.end()) {
        sc.reflectors.push_back(Reflector{rname});
        it = sc.reflectors.end() - 1;
      }
      Reflector& r = *it;
      const std::map<std::string, Setter> refl_keys{
          {"kind", [&r](const std::string& v) { r.kind = to_kind("kind", v); }},
          v3("origin", r.origin), v3("edge_u", r.edge_u), v3("edge_v", r.edge_v), d("loss_db", r.loss_db),
          {"enabled", [&r](const std::string& v) { r.enabled = to_bool("enabled", v); }}};
      apply(node, section, refl_keys, name);
    } else {
      throw ConfigError(name + ": unknown section '" + section + "'");
    }
  }
  return f;
}

ScenarioFile load_scenario(const std::filesystem::path& path) {
  return parse_scenario(io::read_file(path), path.string());
}

}  // namespace dds
