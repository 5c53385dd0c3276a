#include "evoes/envs.hpp"

#include "evoes/error.hpp"

#include <cmath>
#include <string>

namespace evoes {

void validate(const PointWalkerSpec& env) {
  if (env.dims != 1 && env.dims != 2) throw ValidationError("pointwalker dims must be 1 or 2");
  if (env.horizon < 1) throw ValidationError("pointwalker horizon must be >= 1");
  if (!(env.dt > 0.0)) throw ValidationError("pointwalker dt must be > 0");
  if (!(env.accel_bound > 0.0)) throw ValidationError("pointwalker accel_bound must be > 0");
  if (!(env.speed_bound > 0.0)) throw ValidationError("pointwalker speed_bound must be > 0");
}

Objective objective_from_string(std::string_view name) {
  if (name == "+x" || name == "x") return Objective::plus_x;
  if (name == "-x") return Objective::minus_x;
  if (name == "+y" || name == "y") return Objective::plus_y;
  if (name == "-y") return Objective::minus_y;
  throw ValidationError("unknown objective '" + std::string(name) + "' (expected +x, -x, +y or -y)");
}

std::string_view to_string(Objective o) {
  switch (o) {
    case Objective::plus_x: return "+x";
    case Objective::minus_x: return "-x";
    case Objective::plus_y: return "+y";
    case Objective::minus_y: return "-y";
  }
  return "?";
}

double objective_value(Objective o, const Eigen::VectorXd& bc) {
  const bool y_axis = o == Objective::plus_y || o == Objective::minus_y;
  const Eigen::Index axis = y_axis ? 1 : 0;
  if (axis >= bc.size()) throw ValidationError("objective " + std::string(to_string(o)) + " needs a 2-D behavior");
  const double sign = (o == Objective::minus_x || o == Objective::minus_y) ? -1.0 : 1.0;
  return sign * bc[axis];
}

double interference_behavior(double x) { return 5.0 * std::sin(x / 5.0) * std::sin(20.0 * x); }

RolloutResult pointwalker_rollout(const PointWalkerSpec& env, const MlpSpec& spec, const ParamVec& params,
                                  const ObsNormalizer& normalizer, bool record_states) {
  validate(env);
  if (spec.input_dim != 2 * env.dims + 1 || spec.output_dim != env.dims) {
    throw ValidationError("policy shape " + std::to_string(spec.input_dim) + "->" + std::to_string(spec.output_dim) +
                          " does not fit a " + std::to_string(env.dims) + "-D walker");
  }
  const Mlp net(spec, params);
  const int d = env.dims;
  Eigen::VectorXd pos = Eigen::VectorXd::Zero(d);
  Eigen::VectorXd vel = Eigen::VectorXd::Zero(d);
  Eigen::VectorXd obs(2 * d + 1);
  RolloutResult out;
  if (record_states) out.states.reserve(static_cast<std::size_t>(env.horizon));
  for (int t = 0; t < env.horizon; ++t) {
    obs << pos, vel, static_cast<double>(t) / env.horizon;
    if (record_states) out.states.push_back(obs);
    const Eigen::VectorXd accel = env.accel_bound * net.forward(normalizer.apply(obs));
    vel += accel * env.dt;
    const double speed = vel.norm();
    if (speed > env.speed_bound) vel *= env.speed_bound / speed;
    pos += vel * env.dt;
  }
  out.bc = pos;
  out.fitness = pos[0];
  out.steps = env.horizon;
  return out;
}

RolloutResult InterferenceEnv::evaluate(const ParamVec& genome, const ObsNormalizer&, bool) const {
  if (genome.size() != 1) throw ValidationError("interference expects a 1-D genome");
  RolloutResult out;
  out.bc = Eigen::VectorXd::Constant(1, interference_behavior(genome[0]));
  out.fitness = 0.0;
  out.steps = 1;
  return out;
}

PointWalkerEnv::PointWalkerEnv(PointWalkerSpec env, MlpSpec policy)
    : env_(env), policy_(std::move(policy)) {
  validate(env_);
  validate(policy_);
}

RolloutResult PointWalkerEnv::evaluate(const ParamVec& genome, const ObsNormalizer& normalizer,
                                       bool record_states) const {
  return pointwalker_rollout(env_, policy_, genome, normalizer, record_states);
}

std::vector<std::string> environment_names() { return {"interference", "pointwalker1d", "pointwalker2d"}; }

MlpSpec walker_policy(int dims, const MlpSpec& base) {
  MlpSpec spec = base;
  spec.input_dim = 2 * dims + 1;
  spec.output_dim = dims;
  return spec;
}

std::unique_ptr<Environment> make_environment(std::string_view name, const PointWalkerSpec& walker,
                                              const MlpSpec& policy) {
  if (name == "interference") return std::make_unique<InterferenceEnv>();
  if (name == "pointwalker1d" || name == "pointwalker2d") {
    PointWalkerSpec w = walker;
    w.dims = name == "pointwalker1d" ? 1 : 2;
    return std::make_unique<PointWalkerEnv>(w, walker_policy(w.dims, policy));
  }
  throw ValidationError("unknown environment '" + std::string(name) + "'");
}

}  // namespace evoes
