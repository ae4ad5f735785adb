// Serial reference loop vs the OpenMP seed loop on the same experiment.

#include <benchmark/benchmark.h>

#include <omp.h>

#include "trl/harness.hpp"

namespace {

trl::ExperimentConfig bench_config(int seeds) {
  auto cfg = trl::default_experiment(trl::EnvId::kCartPole, trl::Algorithm::kSarsa);
  cfg.seeds.clear();
  for (int s = 0; s < seeds; ++s) cfg.seeds.push_back(static_cast<std::uint64_t>(s));
  cfg.episodes = 30;
  cfg.sarsa.initial_q = 100.0;
  cfg.record_wall_clock = false;
  return cfg;
}

void run(benchmark::State& state, trl::Execution execution) {
  const auto cfg = bench_config(static_cast<int>(state.range(0)));
  std::int64_t steps = 0;
  for (auto _ : state) {
    const auto table = trl::run_experiment(cfg, execution);
    for (const auto& row : table) steps += row.metrics.steps;
    benchmark::DoNotOptimize(table.data());
  }
  state.counters["env_steps/s"] = benchmark::Counter(static_cast<double>(steps), benchmark::Counter::kIsRate);
  state.counters["threads"] = omp_get_max_threads();
}

void BM_ExperimentSerial(benchmark::State& state) { run(state, trl::Execution::kSerial); }
void BM_ExperimentParallel(benchmark::State& state) { run(state, trl::Execution::kParallel); }

BENCHMARK(BM_ExperimentSerial)->Arg(4)->Arg(10)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_ExperimentParallel)->Arg(4)->Arg(10)->Unit(benchmark::kMillisecond)->UseRealTime();

}  // namespace

BENCHMARK_MAIN();
