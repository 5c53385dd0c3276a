#pragma once

#include "evoes/config.hpp"
#include "evoes/distributions.hpp"
#include "evoes/policy.hpp"
#include "evoes/runtime.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <vector>

namespace evoes {

/// First and second moments per trainable mean plus the shared step count.
struct OptimizerState {
  std::vector<ParamVec> m;
  std::vector<ParamVec> v;
  std::int64_t t = 0;

  friend bool operator==(const OptimizerState&, const OptimizerState&) = default;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Complete training state; also the checkpoint payload.
struct Checkpoint {
  std::uint32_t version = kCheckpointVersion;
  TrainConfig config;
  PopulationDistribution dist;
  OptimizerState optimizer;
  ObsNormalizer normalizer;
  std::int64_t generation = 0;
  /// Gradient norms seen so far (used by the optional clip).
  std::vector<double> grad_norms;
};

bool operator==(const Checkpoint& a, const Checkpoint& b);

struct GenStats {
  std::int64_t generation = 0;
  double loss = 0.0;
  double grad_norm = 0.0;
  Eigen::VectorXd bc_mean;
  double bc_var_trace = 0.0;
  double fitness_mean = 0.0;
  double wall_ms = 0.0;
};

struct GenerationResult {
  Checkpoint state;
  GenStats stats;
  EvalBatch batch;
};

/// Environment described by the config.
std::unique_ptr<Environment> make_environment(const TrainConfig& config);

/// Generation-0 state: interference means start at init_mean, MLP tasks at
/// init_mlp (component c of a mixture uses mix(init seed, c)).
Checkpoint initial_state(const TrainConfig& config);

/// One generation: sample, evaluate, shape, estimate, step.
GenerationResult train_generation(const Checkpoint& state, int workers);

/// Applies a gradient (ascent direction, before L2) to the means.
void apply_update(Checkpoint& state, const std::vector<ParamVec>& grad);

std::string stats_csv_header(int bc_dim);
std::string stats_csv_row(const GenStats& stats);

struct RunArtifacts {
  std::filesystem::path log;
  std::filesystem::path final_checkpoint;
  std::vector<std::filesystem::path> checkpoints;
};

using GenerationCallback = std::function<void(const GenerationResult&)>;

/// Runs config.generations generations from `start` into out_dir: log.csv,
/// checkpoint_<gen>.eves every checkpoint_every generations, final.eves.
Checkpoint train_run(const Checkpoint& start, int workers, const std::filesystem::path& out_dir,
                     RunArtifacts* artifacts = nullptr, const GenerationCallback& on_generation = {});
Checkpoint train_run(const TrainConfig& config, int workers, const std::filesystem::path& out_dir,
                     RunArtifacts* artifacts = nullptr, const GenerationCallback& on_generation = {});

/// In-memory loop without artifacts.
Checkpoint train_in_memory(Checkpoint state, std::int64_t generations, int workers,
                           std::vector<GenStats>* stats = nullptr);

}  // namespace evoes
