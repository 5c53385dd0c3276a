#include "evoes/trainer.hpp"

#include "evoes/checkpoint.hpp"
#include "evoes/error.hpp"
#include "evoes/estimators.hpp"
#include "evoes/rng.hpp"
#include "evoes/shaping.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>

namespace evoes {

namespace {

std::string fmt(double x) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, ptr);
}

bool is_walker(const TrainConfig& c) { return c.env != "interference"; }

double median(std::vector<double> v) {
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  if (v.size() % 2 == 1) return *mid;
  const double hi = *mid;
  const double lo = *std::max_element(v.begin(), mid);
  return 0.5 * (lo + hi);
}

}  // namespace

bool operator==(const Checkpoint& a, const Checkpoint& b) {
  if (a.version != b.version || !(a.config == b.config) || a.generation != b.generation) return false;
  if (a.dist.index() != b.dist.index() || sigma_of(a.dist) != sigma_of(b.dist)) return false;
  const auto ma = component_means(a.dist);
  const auto mb = component_means(b.dist);
  if (ma.size() != mb.size()) return false;
  for (std::size_t i = 0; i < ma.size(); ++i) {
    if (ma[i] != mb[i]) return false;
  }
  return a.optimizer == b.optimizer && a.normalizer == b.normalizer && a.grad_norms == b.grad_norms;
}

std::unique_ptr<Environment> make_environment(const TrainConfig& config) {
  return make_environment(config.env, config.walker, config.mlp);
}

Checkpoint initial_state(const TrainConfig& config) {
  validate(config);
  const auto env = make_environment(config);
  const auto k = static_cast<std::size_t>(config.mixture_k);
  std::vector<ParamVec> means;
  for (std::size_t c = 0; c < k; ++c) {
    if (is_walker(config)) {
      const std::uint64_t seed = k == 1 ? effective_init_seed(config) : mix(effective_init_seed(config), c);
      means.push_back(init_mlp(policy_spec(config), seed, config.output_init_scale));
    } else {
      means.push_back(ParamVec::Constant(static_cast<Eigen::Index>(env->genome_dim()), config.init_mean));
    }
  }
  Checkpoint state;
  state.config = config;
  if (k == 1) {
    state.dist = IsoGaussian{means.front(), config.sigma};
  } else {
    state.dist = GaussianMixture{means, config.sigma};
  }
  for (const auto& m : means) {
    state.optimizer.m.push_back(ParamVec::Zero(m.size()));
    state.optimizer.v.push_back(ParamVec::Zero(m.size()));
  }
  state.normalizer = ObsNormalizer::identity(env->obs_dim());
  return state;
}

void apply_update(Checkpoint& state, const std::vector<ParamVec>& grad) {
  const TrainConfig& c = state.config;
  auto means = component_means(state.dist);
  if (grad.size() != means.size()) throw ValidationError("gradient does not match the number of components");
  if (c.optimizer == OptimizerKind::adam) ++state.optimizer.t;
  for (std::size_t k = 0; k < means.size(); ++k) {
    const ParamVec g = grad[k] - c.l2_coef * means[k];
    if (c.optimizer == OptimizerKind::sgd) {
      means[k] += c.learning_rate * g;
      continue;
    }
    ParamVec& m = state.optimizer.m[k];
    ParamVec& v = state.optimizer.v[k];
    m = c.adam_beta1 * m + (1.0 - c.adam_beta1) * g;
    v = c.adam_beta2 * v + (1.0 - c.adam_beta2) * g.cwiseAbs2();
    const double t = static_cast<double>(state.optimizer.t);
    const double bias1 = 1.0 - std::pow(c.adam_beta1, t);
    const double bias2 = 1.0 - std::pow(c.adam_beta2, t);
    means[k].array() += c.learning_rate * (m.array() / bias1) / ((v.array() / bias2).sqrt() + c.adam_eps);
  }
}

GenerationResult train_generation(const Checkpoint& state, int workers) {
  const auto start = std::chrono::steady_clock::now();
  const TrainConfig& c = state.config;
  const auto env = make_environment(c);

  EvalOptions options;
  options.mirrored = c.mirrored;
  options.state_sample_prob = (c.obs_norm && env->obs_dim() > 0) ? c.obs_sample_prob : 0.0;
  GenerationResult out;
  out.batch = evaluate_population(state.dist, *env, state.normalizer, static_cast<std::size_t>(c.population_size),
                                  c.run_seed, state.generation, workers, options);
  const EvalBatch& batch = out.batch;
  const std::size_t n = batch.size();

  std::vector<ParamVec> genomes;
  genomes.reserve(n);
  for (const auto& r : batch.offspring) genomes.push_back(regenerate_genome(state.dist, r));
  const ScoreBatch scores = score_batch(state.dist, genomes);

  const BCMatrix bcs = batch.bc_matrix();
  std::vector<double> fitness(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& r = batch.offspring[i];
    fitness[i] = is_walker(c) ? objective_value(c.objective, r.bc) : r.fitness;
  }

  GradEstimate est;
  switch (c.algo) {
    case Estimator::es: est = es_gradient(rank_normalize(fitness), scores); break;
    case Estimator::maxvar: est = maxvar_gradient(bcs, scores, c.whiten_bcs); break;
    case Estimator::maxent: {
      BCMatrix input = c.whiten_bcs ? whiten(bcs).first : bcs;
      est = maxent_gradient(input, scores, c.kernel_bandwidth);
      break;
    }
  }
  double norm = est.norm();
  if (!std::isfinite(norm) || !std::isfinite(est.loss)) {
    throw NumericalError("non-finite gradient at generation " + std::to_string(state.generation) + " (loss " +
                         fmt(est.loss) + ", grad norm " + fmt(norm) + ")");
  }

  out.state = state;
  if (c.grad_clip && !state.grad_norms.empty()) {
    const double limit = 10.0 * median(state.grad_norms);
    if (norm > limit && limit > 0.0) {
      for (auto& g : est.grad) g *= limit / norm;
    }
  }
  out.state.grad_norms.push_back(norm);
  apply_update(out.state, est.grad);

  if (options.state_sample_prob > 0.0) {
    std::vector<Eigen::VectorXd> states;
    for (const auto& r : batch.offspring) states.insert(states.end(), r.states.begin(), r.states.end());
    out.state.normalizer = update_normalizer(state.normalizer, states);
  }
  out.state.generation = state.generation + 1;

  GenStats& s = out.stats;
  s.generation = state.generation;
  s.loss = est.loss;
  s.grad_norm = norm;
  s.bc_mean = bcs.colwise().mean().transpose();
  s.bc_var_trace = (bcs.rowwise() - s.bc_mean.transpose()).squaredNorm() / static_cast<double>(n);
  double fsum = 0.0;
  for (double f : fitness) fsum += f;
  s.fitness_mean = fsum / static_cast<double>(n);
  if (c.log_wall_time) {
    s.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  }
  return out;
}

std::string stats_csv_header(int bc_dim) {
  std::string h = "generation,loss,grad_norm";
  for (int i = 0; i < bc_dim; ++i) h += ",bc_mean_" + std::to_string(i);
  return h + ",bc_var_trace,fitness_mean,wall_ms";
}

std::string stats_csv_row(const GenStats& s) {
  std::string row = std::to_string(s.generation) + "," + fmt(s.loss) + "," + fmt(s.grad_norm);
  for (Eigen::Index i = 0; i < s.bc_mean.size(); ++i) row += "," + fmt(s.bc_mean[i]);
  return row + "," + fmt(s.bc_var_trace) + "," + fmt(s.fitness_mean) + "," + fmt(s.wall_ms);
}

Checkpoint train_run(const Checkpoint& start, int workers, const std::filesystem::path& out_dir,
                     RunArtifacts* artifacts, const GenerationCallback& on_generation) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create output directory " + out_dir.string() + ": " + ec.message());
  RunArtifacts local;
  RunArtifacts& art = artifacts ? *artifacts : local;
  art.log = out_dir / "log.csv";
  std::ofstream log(art.log, std::ios::trunc);
  if (!log) throw IoError("cannot open " + art.log.string() + " for writing");
  const auto env = make_environment(start.config);
  log << stats_csv_header(env->bc_dim()) << '\n';

  Checkpoint state = start;
  const std::int64_t every = start.config.checkpoint_every;
  while (state.generation < state.config.generations) {
    GenerationResult r = train_generation(state, workers);
    log << stats_csv_row(r.stats) << '\n';
    if (!log) throw IoError("failed writing " + art.log.string());
    if (on_generation) on_generation(r);
    state = std::move(r.state);
    if (every > 0 && state.generation % every == 0) {
      const auto path = out_dir / ("checkpoint_" + std::to_string(state.generation) + ".eves");
      save_checkpoint(state, path);
      art.checkpoints.push_back(path);
    }
  }
  log.flush();
  art.final_checkpoint = out_dir / "final.eves";
  save_checkpoint(state, art.final_checkpoint);
  return state;
}

Checkpoint train_run(const TrainConfig& config, int workers, const std::filesystem::path& out_dir,
                     RunArtifacts* artifacts, const GenerationCallback& on_generation) {
  return train_run(initial_state(config), workers, out_dir, artifacts, on_generation);
}

Checkpoint train_in_memory(Checkpoint state, std::int64_t generations, int workers, std::vector<GenStats>* stats) {
  for (std::int64_t g = 0; g < generations; ++g) {
    GenerationResult r = train_generation(state, workers);
    if (stats) stats->push_back(r.stats);
    state = std::move(r.state);
  }
  return state;
}

}  // namespace evoes
