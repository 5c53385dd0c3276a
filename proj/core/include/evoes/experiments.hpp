#pragma once

#include "evoes/runtime.hpp"
#include "evoes/trainer.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace evoes {

struct AdaptReport {
  std::size_t best_index = 0;
  std::uint64_t best_seed = 0;
  double best_score = 0.0;
  std::vector<double> all_scores;
};

/// Samples k mutations of the population (mutation i uses stream
/// mix(seed, i)), scores each by the signed displacement averaged over
/// n_eval rollouts and returns the best.
AdaptReport adapt_best_of_k(const Checkpoint& state, Objective objective, std::size_t k, std::size_t n_eval,
                            std::uint64_t seed);

/// Continues from `state` with standard ES on `objective`: optimizer state
/// reset, generation counter restarted at 0. Returns one GenStats per
/// generation; stats[g].fitness_mean is the mean fitness of the population
/// before update g.
std::vector<GenStats> seed_standard_es(const Checkpoint& state, Objective objective, std::int64_t generations,
                                       int workers, Checkpoint* final_state = nullptr);

struct BimodalityMetrics {
  double frac_positive = 0.0;
  double mean_abs_bc = 0.0;
  double var_trace = 0.0;
};

/// Needs at least 100 offspring.
BimodalityMetrics bimodality_metrics(const EvalBatch& batch);

struct Heatmap {
  int bins = 0;
  double range = 0.0;
  std::int64_t n = 0;
  std::int64_t out_of_range = 0;
  int dims = 1;
  /// bins (1-D) or bins*bins row-major, row = first BC coordinate.
  std::vector<std::int64_t> counts;

  friend bool operator==(const Heatmap&, const Heatmap&) = default;
};

/// Histogram of BCs over [-range, range]^d. Cell j covers
/// [-range + j*w, -range + (j+1)*w) with w = 2*range/bins; +range falls in
/// the last cell.
Heatmap export_heatmap(const EvalBatch& batch, int bins, double range);

/// First row holds the metadata values bins,range,n,out_of_range,dims; each
/// following row holds the counts of one grid row (a single row for 1-D).
std::string heatmap_to_csv(const Heatmap& heatmap);
Heatmap heatmap_from_csv(const std::string& text);

/// Evaluates n offspring of the checkpoint's distribution (generation
/// counter of the checkpoint, seed `seed`).
EvalBatch evaluate_checkpoint(const Checkpoint& state, std::size_t n, std::uint64_t seed, int workers);

/// Replaces a unimodal population by a k-component mixture whose means are
/// samples from it, with fresh optimizer state.
Checkpoint split_checkpoint(const Checkpoint& state, std::size_t k, std::uint64_t seed);

/// Mean BC of each mixture component, from n offspring sampled per component.
std::vector<Eigen::VectorXd> component_mean_bcs(const Checkpoint& state, std::size_t n, std::uint64_t seed,
                                                int workers);

}  // namespace evoes
