#include <doctest.h>

#include <evoes/error.hpp>
#include <evoes/rng.hpp>
#include <evoes/runtime.hpp>

#include <atomic>
#include <cmath>
#include <numbers>

using namespace evoes;

namespace {

bool same(const EvalBatch& a, const EvalBatch& b) {
  if (a.size() != b.size() || a.generation != b.generation) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto& x = a.offspring[i];
    const auto& y = b.offspring[i];
    if (x.index != y.index || x.component != y.component || x.seed != y.seed || x.sign != y.sign || x.bc != y.bc ||
        x.fitness != y.fitness || x.states.size() != y.states.size())
      return false;
  }
  return true;
}

double bc_variance(const EvalBatch& b) {
  const auto m = b.bc_matrix();
  return (m.array() - m.mean()).square().mean();
}

}  // namespace

TEST_SUITE("runtime") {

TEST_CASE("results do not depend on the worker count") {
  PointWalkerSpec w{};
  const MlpSpec spec = walker_policy(1, MlpSpec{1, 1, {8, 8}, Activation::tanh, Activation::tanh});
  const PointWalkerEnv env(w, spec);
  const PopulationDistribution d = GaussianMixture{{init_mlp(spec, 1, 1.0), init_mlp(spec, 2, 1.0)}, 0.1};
  const EvalOptions opts{true, 0.2};
  const auto one = evaluate_population(d, env, ObsNormalizer::identity(3), 64, 9, 4, 1, opts);
  const auto eight = evaluate_population(d, env, ObsNormalizer::identity(3), 64, 9, 4, 8, opts);
  CHECK(same(one, eight));
  for (std::size_t i = 0; i < one.size(); ++i) CHECK(one.offspring[i].index == i);
}

TEST_CASE("single zero-scale interference offspring") {
  const InterferenceEnv env;
  const auto b = evaluate_population(IsoGaussian{ParamVec::Zero(1), 0.0}, env, ObsNormalizer{}, 1, 0, 0, 1);
  REQUIRE(b.size() == 1);
  CHECK(b.offspring[0].bc[0] == 0.0);
}

TEST_CASE("behavior variance is larger near the envelope peak") {
  const InterferenceEnv env;
  const auto peak = evaluate_population(IsoGaussian{ParamVec::Constant(1, 2.5 * std::numbers::pi), 0.5}, env,
                                        ObsNormalizer{}, 500, 3, 0, 1);
  const auto origin = evaluate_population(IsoGaussian{ParamVec::Zero(1), 0.5}, env, ObsNormalizer{}, 500, 3, 0, 1);
  CHECK(bc_variance(peak) > bc_variance(origin));
}

TEST_CASE("genomes regenerate from the recorded seed") {
  const InterferenceEnv env;
  const PopulationDistribution d = IsoGaussian{ParamVec::Constant(1, 1.0), 0.5};
  for (bool mirrored : {false, true}) {
    const auto b = evaluate_population(d, env, ObsNormalizer{}, 20, 5, 7, 2, EvalOptions{mirrored, 0.0});
    for (const auto& r : b.offspring) {
      CHECK(r.seed == offspring_stream(generation_seed(5, 7), r.index, mirrored).first);
      CHECK(env.evaluate(regenerate_genome(d, r), ObsNormalizer{}, false).bc == r.bc);
    }
  }
}

TEST_CASE("normalizer sampling rate") {
  int hits = 0;
  for (std::uint64_t s = 0; s < 100000; ++s) hits += sampled_for_normalizer(mix(s, 1), 1.0, 0.01) ? 1 : 0;
  // Binomial(1e5, 0.01): sd about 31.5.
  CHECK(std::abs(hits - 1000) < 4 * 31.5);
  CHECK_FALSE(sampled_for_normalizer(123, 1.0, 0.0));
  CHECK(sampled_for_normalizer(123, -1.0, 1.0));
}

TEST_CASE("parallel_for covers every index once and rethrows the lowest failure") {
  std::vector<std::atomic<int>> hits(1000);
  parallel_for(1000, 4, [&](std::size_t i) { hits[i]++; });
  for (auto& h : hits) CHECK(h.load() == 1);
  try {
    parallel_for(100, 4, [](std::size_t i) {
      if (i == 17 || i == 80) throw ValidationError("bad " + std::to_string(i));
    });
    FAIL("expected an exception");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()) == "bad 17");
  }
}

TEST_CASE("evaluation errors surface as batch failures") {
  const InterferenceEnv env;
  CHECK_THROWS_AS(evaluate_population(IsoGaussian{ParamVec::Zero(2), 0.5}, env, ObsNormalizer{}, 4, 0, 0, 2),
                  ValidationError);
  CHECK_THROWS_AS(evaluate_population(IsoGaussian{ParamVec::Zero(1), 0.5}, env, ObsNormalizer{}, 0, 0, 0, 1),
                  ValidationError);
  CHECK_THROWS_AS(evaluate_population(IsoGaussian{ParamVec::Zero(1), 0.5}, env, ObsNormalizer{}, 4, 0, 0, 0),
                  ValidationError);
}

}
