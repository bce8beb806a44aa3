// Serial reference vs OpenMP path for the heavy kernels.
#include <benchmark/benchmark.h>

#include <random>

#include "dds/pipeline.hpp"

using namespace dds;

namespace {

Execution mode(const benchmark::State& state) { return state.range(0) ? Execution::Parallel : Execution::Serial; }

Eigen::MatrixXcd noise_grid(int rows, int cols) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n;
  Eigen::MatrixXcd g(rows, cols);
  for (Eigen::Index i = 0; i < g.size(); ++i) g(i) = Complex(n(rng), n(rng));
  return g;
}

const SounderConfig& config() {
  static const SounderConfig cfg = reference_config();
  return cfg;
}

const SampledSignal& record() {
  static const SampledSignal rx = [] {
    ScenarioConfig sc = default_drive_by();
    sc.duration_s = 16 * config().snapshot_time_s;
    return apply_channel(tx_waveforms(config()), sc, config(), 1);
  }();
  return rx;
}

void BM_Synthesize(benchmark::State& state) {
  const auto tx = tx_waveforms(config());
  ScenarioConfig sc = default_drive_by();
  sc.duration_s = 8 * config().snapshot_time_s;
  for (auto _ : state) benchmark::DoNotOptimize(apply_channel(tx, sc, config(), 1, mode(state)));
}

void BM_CoherentAverage(benchmark::State& state) {
  const auto& rx = record();
  for (auto _ : state) benchmark::DoNotOptimize(coherent_average(rx, config(), 350.0, 0, mode(state)));
}

void BM_LSF(benchmark::State& state) {
  const Eigen::MatrixXcd H = noise_grid(21, 360);
  const LSFConfig lc;
  for (auto _ : state) benchmark::DoNotOptimize(lsf_estimate(H, lc, native_axes(config()), mode(state)));
}

void BM_SBL(benchmark::State& state) {
  const int M = static_cast<int>(state.range(1));
  const Eigen::MatrixXcd H = noise_grid(21, M);
  const SparseModel model(21, M, 4);
  GridAxes axes = native_axes(config());
  axes.delay_upsampling = 4;
  SBLConfig cfg;
  cfg.iterations = 3;
  for (auto _ : state) benchmark::DoNotOptimize(sbl_fit(H, model, cfg, axes, mode(state)));
}

}  // namespace

BENCHMARK(BM_Synthesize)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CoherentAverage)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_LSF)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SBL)->Args({0, 32})->Args({1, 32})->Args({0, 360})->Args({1, 360})->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
