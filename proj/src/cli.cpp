#include "dds/cli.hpp"

#include <omp.h>

#include <CLI11.hpp>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <json.hpp>
#include <ostream>
#include <set>

#include "dds/config_file.hpp"
#include "dds/iq_io.hpp"
#include "dds/pipeline.hpp"

#ifndef DDS_VERSION
#define DDS_VERSION "unknown"
#endif

namespace dds {
namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace {

struct Options {
  std::string config;
  std::string scenario;
  std::uint32_t seed = 0;
  std::string out_dir = ".";
  int windows = 0;
  int sbl_iters = 0;
  int peaks = 0;
};

const char* const kStages[] = {"plan", "simulate", "process", "analyze"};

// Stage bookkeeping: every file read or written, relative to the out dir,
// with its content hash.
class Manifest {
 public:
  Manifest(fs::path dir, const Options& opt) : dir_(std::move(dir)) {
    const fs::path p = dir_ / "manifest.json";
    if (fs::exists(p)) {
      try {
        doc_ = json::parse(io::read_file(p));
      } catch (const json::exception&) {
        doc_ = json::object();  // unreadable manifest: start afresh
      }
    }
    doc_["version"] = DDS_VERSION;
    doc_["seed"] = opt.seed;
    if (!opt.config.empty()) doc_["configs"]["config"] = opt.config;
    if (!opt.scenario.empty()) doc_["configs"]["scenario"] = opt.scenario;
    if (!doc_.contains("stages")) doc_["stages"] = json::object();
  }

  void record(const std::string& stage, const std::vector<std::string>& inputs,
              const std::vector<std::string>& outputs, double seconds) {
    json s;
    s["inputs"] = hashes(inputs);
    s["outputs"] = hashes(outputs);
    s["wall_clock_s"] = seconds;
    s["stale"] = false;
    doc_["stages"][stage] = s;
    refresh_staleness();
    io::write_atomic(dir_ / "manifest.json", doc_.dump(2) + "\n");
  }

 private:
  json hashes(const std::vector<std::string>& files) const {
    json h = json::object();
    for (const auto& f : files) h[f] = fnv1a_hex(io::read_file(dir_ / f));
    return h;
  }

  // A stage is stale once any file it consumed has changed on disk or was
  // written by a stale stage.
  void refresh_staleness() {
    std::set<std::string> tainted;
    for (const char* name : kStages) {
      if (!doc_["stages"].contains(name)) continue;
      json& s = doc_["stages"][name];
      bool stale = false;
      for (const auto& [file, hash] : s["inputs"].items()) {
        const fs::path p = dir_ / file;
        if (tainted.count(file) || !fs::exists(p) || fnv1a_hex(io::read_file(p)) != hash.get<std::string>()) {
          stale = true;
        }
      }
      s["stale"] = stale;
      if (stale) {
        for (const auto& [file, hash] : s["outputs"].items()) tainted.insert(file);
      }
    }
  }

  fs::path dir_;
  json doc_ = json::object();
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string seed_line(std::uint64_t seed) { return "# seed " + std::to_string(seed) + "\n"; }

std::string tx_name(const char* stem, int tx, const char* ext) {
  return std::string(stem) + "_tx" + std::to_string(tx) + ext;
}

RunConfig run_config(const Options& opt) {
  RunConfig rc = opt.config.empty() ? RunConfig{} : load_run_config(opt.config);
  if (opt.sbl_iters > 0) rc.sbl.iterations = opt.sbl_iters;
  if (opt.peaks > 0) rc.sbl.P = opt.peaks;
  return rc;
}

ScenarioFile scenario_file(const Options& opt) {
  return opt.scenario.empty() ? ScenarioFile{} : load_scenario(opt.scenario);
}

int cmd_plan(const Options& opt, std::ostream& out) {
  const auto t0 = std::chrono::steady_clock::now();
  const RunConfig rc = run_config(opt);
  const ValidationReport report = validate_config(rc.sounder);
  const std::string text = seed_line(opt.seed) + report.to_text();
  fs::create_directories(opt.out_dir);
  io::write_atomic(fs::path(opt.out_dir) / "plan_report.txt", text);
  Manifest(opt.out_dir, opt).record("plan", {}, {"plan_report.txt"}, seconds_since(t0));
  out << text;
  return report.pass() ? kExitOk : kExitValidation;
}

void cmd_simulate(const Options& opt, std::ostream& out) {
  const auto t0 = std::chrono::steady_clock::now();
  const RunConfig rc = run_config(opt);
  const ScenarioFile sf = scenario_file(opt);
  const SimulationOutput sim = simulate(sf, rc.sounder, opt.seed);
  const fs::path dir = opt.out_dir;
  fs::create_directories(dir);
  io::write_dds1(dir / "rx.dds", sim.rx, opt.seed);
  io::write_dds1(dir / "standstill.dds", sim.standstill, opt.seed);
  io::write_atomic(dir / "truth.csv", truth_csv(sf.scenario, rc.sounder, opt.seed));
  Manifest(dir, opt).record("simulate", {}, {"rx.dds", "standstill.dds", "truth.csv"}, seconds_since(t0));
  out << "simulate: " << sim.rx.size() << " samples from t = " << sim.rx.t0_s << " s\n";
}

void cmd_process(const Options& opt, std::ostream& out) {
  const auto t0 = std::chrono::steady_clock::now();
  const RunConfig rc = run_config(opt);
  const ScenarioFile sf = scenario_file(opt);
  const fs::path dir = opt.out_dir;
  std::uint32_t seed = 0;
  const SampledSignal rx = io::read_dds1(dir / "rx.dds", &seed);
  const SampledSignal standstill = io::read_dds1(dir / "standstill.dds");
  const ProcessOutput po = process(rx, standstill, sf.scenario, rc.sounder);

  std::vector<std::string> outputs;
  for (int i = 0; i < rc.sounder.tx_count; ++i) {
    const auto& H = po.H[static_cast<std::size_t>(i)];
    io::write_ddg1(dir / tx_name("H", i, ".ddg"), H, seed);
    const std::vector<std::string> header{"time_s", "snr_db", "noise_power", "los_doppler_hz"};
    const std::vector<std::vector<double>> cols{H.snapshot_times_s, po.snr_db[static_cast<std::size_t>(i)],
                                                H.noise_power, H.doppler_hz};
    io::write_atomic(dir / tx_name("snr", i, ".csv"), seed_line(seed) + io::csv(header, cols));
    outputs.push_back(tx_name("H", i, ".ddg"));
    outputs.push_back(tx_name("snr", i, ".csv"));
  }
  json sync;
  sync["seed"] = seed;
  sync["cfo_hz"] = po.cfo_hz;
  io::write_atomic(dir / "sync.json", sync.dump(2) + "\n");
  outputs.push_back("sync.json");
  Manifest(dir, opt).record("process", {"rx.dds", "standstill.dds"}, outputs, seconds_since(t0));
  out << "process: CFO " << po.cfo_hz << " Hz, " << po.H.front().snapshots() << " snapshots per TX\n";
}

void cmd_analyze(const Options& opt, std::ostream& out) {
  const auto t0 = std::chrono::steady_clock::now();
  const RunConfig rc = run_config(opt);
  const fs::path dir = opt.out_dir;
  std::vector<std::string> inputs, outputs;
  for (int i = 0; i < rc.sounder.tx_count; ++i) {
    std::uint64_t seed = 0;
    const TransferFunctionGrid H = io::read_ddg1(dir / tx_name("H", i, ".ddg"), &seed);
    inputs.push_back(tx_name("H", i, ".ddg"));
    if (H.tones() != rc.sounder.tone_count) {
      throw ConfigError(tx_name("H", i, ".ddg") + " has " + std::to_string(H.tones()) + " tones, config has " +
                        std::to_string(rc.sounder.tone_count));
    }
    const std::vector<double> snr = snr_per_tx(H, H.noise_power);
    const auto results = analyze(H, snr, rc, opt.windows);

    const std::string sub = "analysis/tx" + std::to_string(i);
    fs::create_directories(dir / sub);
    std::vector<double> wf_start, wf_doppler, wf_power;
    std::vector<double> s_window, s_start, s_snr, s_noise, s_lsf_delay, s_lsf_doppler, s_sbl_peaks;
    for (const auto& wa : results) {
      char stem[16];
      std::snprintf(stem, sizeof stem, "w%03d", wa.window);
      const std::string base = sub + "/" + stem;
      io::write_ddg2(dir / (base + "_lsf.ddg"), wa.lsf, seed);
      io::write_atomic(dir / (base + "_dsd.csv"),
                       seed_line(seed) + io::csv(std::vector<std::string>{"doppler_hz", "power"},
                                                 std::vector<std::vector<double>>{wa.lsf.doppler_axis_hz, wa.dsd}));
      io::write_atomic(dir / (base + "_lsf_peaks.json"), io::peaks_json(wa.lsf_peaks, seed, "lsf"));
      io::write_ddg2(dir / (base + "_gamma.ddg"), wa.sbl.gamma, seed);
      io::write_atomic(dir / (base + "_sbl_peaks.json"), io::peaks_json(wa.sbl_peaks, seed, "sbl"));
      for (const char* suffix : {"_lsf.ddg", "_dsd.csv", "_lsf_peaks.json", "_gamma.ddg", "_sbl_peaks.json"}) {
        outputs.push_back(base + suffix);
      }
      for (std::size_t m = 0; m < wa.dsd.size(); ++m) {
        wf_start.push_back(wa.start_s);
        wf_doppler.push_back(wa.lsf.doppler_axis_hz[m]);
        wf_power.push_back(wa.dsd[m]);
      }
      s_window.push_back(wa.window);
      s_start.push_back(wa.start_s);
      s_snr.push_back(wa.median_snr_db);
      s_noise.push_back(wa.sbl.noise_var);
      s_lsf_delay.push_back(wa.lsf_peaks.empty() ? 0.0 : wa.lsf_peaks.front().delay_s);
      s_lsf_doppler.push_back(wa.lsf_peaks.empty() ? 0.0 : wa.lsf_peaks.front().doppler_hz);
      s_sbl_peaks.push_back(static_cast<double>(wa.sbl_peaks.size()));
    }
    const std::string wf = "analysis/" + tx_name("dsd_waterfall", i, ".csv");
    io::write_atomic(dir / wf, seed_line(seed) + io::csv(std::vector<std::string>{"window_start_s", "doppler_hz", "power"},
                                                         std::vector<std::vector<double>>{wf_start, wf_doppler, wf_power}));
    const std::string summary = "analysis/" + tx_name("windows", i, ".csv");
    io::write_atomic(dir / summary,
                     seed_line(seed) + io::csv(std::vector<std::string>{"window", "start_s", "median_snr_db",
                                                                        "sbl_noise_var", "lsf_top_delay_s",
                                                                        "lsf_top_doppler_hz", "sbl_peaks"},
                                               std::vector<std::vector<double>>{s_window, s_start, s_snr, s_noise,
                                                                                s_lsf_delay, s_lsf_doppler,
                                                                                s_sbl_peaks}));
    outputs.push_back(wf);
    outputs.push_back(summary);
    out << "analyze: TX " << i << ", " << results.size() << " windows\n";
  }
  Manifest(dir, opt).record("analyze", inputs, outputs, seconds_since(t0));
}

void apply_thread_cap() {
  const char* env = std::getenv("DDS_THREADS");
  if (env == nullptr || *env == '\0') return;
  char* end = nullptr;
  const long n = std::strtol(env, &end, 10);
  if (*end != '\0' || n < 1) {
    throw ConfigError(std::string("DDS_THREADS must be a positive integer, got '") + env + "'");
  }
  omp_set_num_threads(static_cast<int>(n));
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Delay-Doppler channel sounder evaluation chain"};
  app.require_subcommand(1);
  Options opt;

  auto common = [&opt](CLI::App* sub, bool scenario, bool seed) {
    sub->add_option("--config", opt.config, "sounder/evaluation INI file (defaults: reference parameters)")
        ->check(CLI::ExistingFile);
    if (scenario) sub->add_option("--scenario", opt.scenario, "scenario INI file")->check(CLI::ExistingFile);
    if (seed) sub->add_option("--seed", opt.seed, "noise seed");
    sub->add_option("--out-dir", opt.out_dir, "output directory");
  };
  auto analysis_flags = [&opt](CLI::App* sub) {
    sub->add_option("--windows", opt.windows, "evaluation windows per TX (0: all)")->check(CLI::NonNegativeNumber);
    sub->add_option("--sbl-iters", opt.sbl_iters, "SBL iterations")->check(CLI::PositiveNumber);
    sub->add_option("--peaks", opt.peaks, "peaks P per window")->check(CLI::PositiveNumber);
  };

  CLI::App* plan = app.add_subcommand("plan", "validate the sounder design");
  common(plan, false, true);
  CLI::App* sim = app.add_subcommand("simulate", "synthesize the RX record");
  common(sim, true, true);
  CLI::App* proc = app.add_subcommand("process", "CFO, averaging, demux, SNR");
  common(proc, true, false);
  CLI::App* ana = app.add_subcommand("analyze", "LSF, DSD and SBL per window");
  common(ana, false, false);
  analysis_flags(ana);
  CLI::App* all = app.add_subcommand("run-all", "plan, simulate, process, analyze");
  common(all, true, true);
  analysis_flags(all);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  }

  try {
    apply_thread_cap();
    if (*plan) return cmd_plan(opt, out);
    if (*sim) cmd_simulate(opt, out);
    if (*proc) cmd_process(opt, out);
    if (*ana) cmd_analyze(opt, out);
    if (*all) {
      if (cmd_plan(opt, out) != kExitOk) return kExitValidation;
      cmd_simulate(opt, out);
      cmd_process(opt, out);
      cmd_analyze(opt, out);
    }
    return kExitOk;
  } catch (const IoError& e) {
    err << "I/O error: " << e.what() << "\n";
    return kExitIo;
  } catch (const fs::filesystem_error& e) {
    err << "I/O error: " << e.what() << "\n";
    return kExitIo;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::invalid_argument& e) {  // ShapeError
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::domain_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  }
}

}  // namespace dds
