#include <benchmark/benchmark.h>

#include <evoes/config.hpp>
#include <evoes/runtime.hpp>
#include <evoes/trainer.hpp>

using namespace evoes;

namespace {

// args: population size, workers
void BM_EvaluateWalkerPopulation(benchmark::State& state) {
  TrainConfig c = preset("locomotion-maxent");
  const Checkpoint st = initial_state(c);
  const auto env = make_environment(c);
  const auto n = static_cast<std::size_t>(state.range(0));
  const int workers = static_cast<int>(state.range(1));
  std::int64_t gen = 0;
  for (auto _ : state) benchmark::DoNotOptimize(evaluate_population(st.dist, *env, st.normalizer, n, 1, gen++, workers));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_EvaluateWalkerPopulation)->ArgsProduct({{500}, {1, 2, 4}})->Unit(benchmark::kMillisecond)->UseRealTime();

void BM_InterferenceGeneration(benchmark::State& state) {
  const TrainConfig c = preset("interference-maxent");
  Checkpoint st = initial_state(c);
  for (auto _ : state) st = train_generation(st, 1).state;
}
BENCHMARK(BM_InterferenceGeneration)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
