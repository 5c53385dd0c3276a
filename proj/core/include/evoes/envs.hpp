#pragma once

#include "evoes/distributions.hpp"
#include "evoes/policy.hpp"

#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace evoes {

struct RolloutResult {
  Eigen::VectorXd bc;
  double fitness = 0.0;
  int steps = 0;
  /// Raw observations, filled only when requested.
  std::vector<Eigen::VectorXd> states;
};

struct PointWalkerSpec {
  int dims = 1;
  int horizon = 100;
  double dt = 0.1;
  double accel_bound = 1.0;
  double speed_bound = 2.0;

  friend bool operator==(const PointWalkerSpec&, const PointWalkerSpec&) = default;
};

void validate(const PointWalkerSpec& env);

/// Signed displacement along one axis.
enum class Objective { plus_x, minus_x, plus_y, minus_y };

Objective objective_from_string(std::string_view name);
std::string_view to_string(Objective o);
double objective_value(Objective o, const Eigen::VectorXd& bc);

/// 5 sin(x/5) sin(20x).
double interference_behavior(double x);

RolloutResult pointwalker_rollout(const PointWalkerSpec& env, const MlpSpec& spec, const ParamVec& params,
                                  const ObsNormalizer& normalizer, bool record_states = false);

/// Stateless evaluator shared by all workers.
class Environment {
 public:
  virtual ~Environment() = default;
  virtual std::string_view name() const = 0;
  virtual std::size_t genome_dim() const = 0;
  virtual int bc_dim() const = 0;
  /// Observation size, 0 for environments without a policy.
  virtual int obs_dim() const = 0;
  virtual RolloutResult evaluate(const ParamVec& genome, const ObsNormalizer& normalizer,
                                 bool record_states) const = 0;
};

class InterferenceEnv final : public Environment {
 public:
  std::string_view name() const override { return "interference"; }
  std::size_t genome_dim() const override { return 1; }
  int bc_dim() const override { return 1; }
  int obs_dim() const override { return 0; }
  RolloutResult evaluate(const ParamVec& genome, const ObsNormalizer& normalizer,
                         bool record_states) const override;
};

class PointWalkerEnv final : public Environment {
 public:
  PointWalkerEnv(PointWalkerSpec env, MlpSpec policy);
  std::string_view name() const override { return env_.dims == 1 ? "pointwalker1d" : "pointwalker2d"; }
  std::size_t genome_dim() const override { return param_count(policy_); }
  int bc_dim() const override { return env_.dims; }
  int obs_dim() const override { return policy_.input_dim; }
  RolloutResult evaluate(const ParamVec& genome, const ObsNormalizer& normalizer,
                         bool record_states) const override;
  const MlpSpec& policy() const { return policy_; }
  const PointWalkerSpec& spec() const { return env_; }

 private:
  PointWalkerSpec env_;
  MlpSpec policy_;
};

/// Registry names accepted by make_environment.
std::vector<std::string> environment_names();

/// `hidden`, `activation` and `output_activation` of `policy` are used for
/// the walker; its input/output dims are derived from the walker dims.
std::unique_ptr<Environment> make_environment(std::string_view name, const PointWalkerSpec& walker,
                                              const MlpSpec& policy);

/// Policy shape for a walker with the given dims and hidden layout.
MlpSpec walker_policy(int dims, const MlpSpec& base);

}  // namespace evoes
