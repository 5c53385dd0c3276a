#include <benchmark/benchmark.h>

#include <evoes/distributions.hpp>
#include <evoes/estimators.hpp>
#include <evoes/rng.hpp>

using namespace evoes;

namespace {

BCMatrix random_bcs(std::int64_t n, int d) {
  Rng rng(3);
  BCMatrix b(n, d);
  for (Eigen::Index i = 0; i < b.rows(); ++i)
    for (Eigen::Index c = 0; c < b.cols(); ++c) b(i, c) = 3.0 * rng.normal();
  return b;
}

void BM_KdeDensity(benchmark::State& state) {
  const BCMatrix b = random_bcs(state.range(0), static_cast<int>(state.range(1)));
  for (auto _ : state) benchmark::DoNotOptimize(kde_density(b, 1.0));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_KdeDensity)->ArgsProduct({{500, 10000}, {1, 2}})->Unit(benchmark::kMillisecond);

void BM_MaxentGradient(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const PopulationDistribution dist = IsoGaussian{ParamVec::Zero(64), 0.02};
  std::vector<ParamVec> g;
  for (auto& o : sample_offspring(dist, n, 5, false)) g.push_back(std::move(o.genome));
  const ScoreBatch scores = score_batch(dist, g);
  const BCMatrix b = random_bcs(state.range(0), 1);
  for (auto _ : state) benchmark::DoNotOptimize(maxent_gradient(b, scores, 1.0));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_MaxentGradient)->Arg(500)->Arg(10000)->Unit(benchmark::kMillisecond);

}  // namespace
