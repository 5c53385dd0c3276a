#pragma once

#include "evoes/envs.hpp"
#include "evoes/estimators.hpp"
#include "evoes/policy.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace evoes {

enum class OptimizerKind { sgd, adam };

struct TrainConfig {
  Estimator algo = Estimator::maxvar;
  std::string env = "interference";
  std::int64_t population_size = 500;
  double sigma = 0.5;
  double learning_rate = 0.03;
  double l2_coef = 0.0;
  double kernel_bandwidth = 1.0;
  std::int64_t generations = 300;
  OptimizerKind optimizer = OptimizerKind::sgd;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  bool mirrored = false;
  std::uint64_t run_seed = 0;
  std::int64_t mixture_k = 1;
  bool whiten_bcs = true;
  Objective objective = Objective::plus_x;
  /// Initial mean for genome-space tasks (interference).
  double init_mean = 1.0;
  /// Seed for init_mlp; -1 derives it from run_seed.
  std::int64_t init_seed = -1;
  double output_init_scale = 0.01;
  bool obs_norm = true;
  double obs_sample_prob = 0.01;
  bool grad_clip = false;
  /// Write a checkpoint every k generations (0 = only the final one).
  std::int64_t checkpoint_every = 0;
  bool log_wall_time = false;
  MlpSpec mlp{3, 1, {16, 16}, Activation::tanh, Activation::tanh};
  PointWalkerSpec walker{};

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

/// Throws ValidationError naming the first offending key.
void validate(const TrainConfig& config);

std::string_view to_string(OptimizerKind o);

/// Flat dotted keys ("mlp.hidden", "pointwalker.horizon") in canonical order.
std::vector<std::string> config_keys();

/// Sets one key from its text form. Unknown keys and malformed values throw
/// ValidationError naming the key.
void set_config_value(TrainConfig& config, std::string_view key, std::string_view value);
std::string get_config_value(const TrainConfig& config, std::string_view key);

/// Canonical key=value document with [mlp] and [pointwalker] tables.
std::string serialize_config(const TrainConfig& config);

/// Parses a key=value document (comments start with '#', "[table]" lines
/// prefix following keys) on top of `base`.
TrainConfig parse_config_text(std::string_view text, TrainConfig base = {});
TrainConfig parse_config_file(const std::filesystem::path& path, TrainConfig base = {});

/// Applies "key=value" overrides in order.
TrainConfig apply_overrides(TrainConfig config, const std::vector<std::string>& assignments);

std::vector<std::string> preset_names();
TrainConfig preset(std::string_view name);

/// Flat key -> value map, used for JSON snapshots.
std::map<std::string, std::string> config_to_map(const TrainConfig& config);
TrainConfig config_from_map(const std::map<std::string, std::string>& values);

/// Effective seed for init_mlp.
std::uint64_t effective_init_seed(const TrainConfig& config);

/// Policy spec matching the configured environment.
MlpSpec policy_spec(const TrainConfig& config);

}  // namespace evoes
