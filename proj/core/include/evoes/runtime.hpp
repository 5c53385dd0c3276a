#pragma once

#include "evoes/distributions.hpp"
#include "evoes/envs.hpp"
#include "evoes/policy.hpp"
#include "evoes/shaping.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace evoes {

struct EvalRecord {
  std::size_t index = 0;
  std::size_t component = 0;
  std::uint64_t seed = 0;  // noise stream of the genome
  double sign = 1.0;
  Eigen::VectorXd bc;
  double fitness = 0.0;
  /// Raw observations of this rollout if it was picked for normalizer statistics.
  std::vector<Eigen::VectorXd> states;
};

struct EvalBatch {
  std::int64_t generation = 0;
  std::vector<EvalRecord> offspring;  // sorted by index

  std::size_t size() const { return offspring.size(); }
  BCMatrix bc_matrix() const;
  std::vector<double> fitness() const;
};

struct EvalOptions {
  bool mirrored = false;
  /// Probability that a rollout's states are recorded.
  double state_sample_prob = 0.0;
};

/// Worker count from EVOES_WORKERS, or 1.
int default_workers();

/// Calls fn(i) for i in [0, n) on `workers` threads. fn must write only to
/// slot i of its output. The first exception (lowest index) is rethrown.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn);

/// Evaluates n offspring of `dist`. Offspring i is regenerated from
/// offspring_seed(run_seed, generation, i); the result does not depend on
/// `workers`.
EvalBatch evaluate_population(const PopulationDistribution& dist, const Environment& env,
                              const ObsNormalizer& normalizer, std::size_t n, std::uint64_t run_seed,
                              std::int64_t generation, int workers, const EvalOptions& options = {});

/// Genome of a recorded offspring.
ParamVec regenerate_genome(const PopulationDistribution& dist, const EvalRecord& record);

/// Whether offspring with this stream seed contributes normalizer states.
bool sampled_for_normalizer(std::uint64_t seed, double sign, double prob);

}  // namespace evoes
