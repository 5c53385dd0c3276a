#include "evoes/experiments.hpp"

#include "evoes/error.hpp"
#include "evoes/rng.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

namespace evoes {

namespace {

std::string fmt(double x) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, ptr);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

template <class T>
T parse_cell(const std::string& s) {
  T v{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) throw ValidationError("heatmap csv: bad value '" + s + "'");
  return v;
}

int cell_index(double x, int bins, double range) {
  if (!(std::abs(x) <= range)) return -1;
  const int j = static_cast<int>(std::floor((x + range) / (2.0 * range) * bins));
  return std::min(j, bins - 1);
}

}  // namespace

AdaptReport adapt_best_of_k(const Checkpoint& state, Objective objective, std::size_t k, std::size_t n_eval,
                            std::uint64_t seed) {
  if (k < 1) throw ValidationError("adapt needs k >= 1");
  if (n_eval < 1) throw ValidationError("adapt needs n_eval >= 1");
  const auto env = make_environment(state.config);
  AdaptReport report;
  report.all_scores.resize(k);
  for (std::size_t i = 0; i < k; ++i) {
    const std::uint64_t stream = mix(seed, i);
    const ParamVec genome = regenerate(state.dist, stream).second;
    double total = 0.0;
    for (std::size_t e = 0; e < n_eval; ++e) {
      total += objective_value(objective, env->evaluate(genome, state.normalizer, false).bc);
    }
    report.all_scores[i] = total / static_cast<double>(n_eval);
    if (i == 0 || report.all_scores[i] > report.best_score) {
      report.best_index = i;
      report.best_seed = stream;
      report.best_score = report.all_scores[i];
    }
  }
  return report;
}

std::vector<GenStats> seed_standard_es(const Checkpoint& state, Objective objective, std::int64_t generations,
                                       int workers, Checkpoint* final_state) {
  if (generations < 0) throw ValidationError("generations must be >= 0");
  Checkpoint s = state;
  s.config.algo = Estimator::es;
  s.config.objective = objective;
  validate(s.config);
  s.generation = 0;
  s.grad_norms.clear();
  for (auto& m : s.optimizer.m) m.setZero();
  for (auto& v : s.optimizer.v) v.setZero();
  s.optimizer.t = 0;
  std::vector<GenStats> curve;
  s = train_in_memory(std::move(s), generations, workers, &curve);
  if (final_state) *final_state = std::move(s);
  return curve;
}

BimodalityMetrics bimodality_metrics(const EvalBatch& batch) {
  if (batch.size() < 100) throw ValidationError("bimodality metrics need at least 100 offspring");
  const BCMatrix bcs = batch.bc_matrix();
  const double n = static_cast<double>(bcs.rows());
  BimodalityMetrics m;
  double pos = 0.0;
  double mag = 0.0;
  for (Eigen::Index i = 0; i < bcs.rows(); ++i) {
    if (bcs(i, 0) > 0.0) pos += 1.0;
    mag += bcs.cols() == 1 ? std::abs(bcs(i, 0)) : bcs.row(i).norm();
  }
  m.frac_positive = pos / n;
  m.mean_abs_bc = mag / n;
  const Eigen::RowVectorXd mean = bcs.colwise().mean();
  m.var_trace = (bcs.rowwise() - mean).squaredNorm() / n;
  return m;
}

Heatmap export_heatmap(const EvalBatch& batch, int bins, double range) {
  if (bins < 1) throw ValidationError("heatmap needs bins >= 1");
  if (!(range > 0.0)) throw ValidationError("heatmap range must be > 0");
  if (batch.size() == 0) throw ValidationError("heatmap needs a non-empty batch");
  const int dims = static_cast<int>(batch.offspring.front().bc.size());
  if (dims != 1 && dims != 2) throw ValidationError("heatmap supports 1-D and 2-D behaviors");
  Heatmap h;
  h.bins = bins;
  h.range = range;
  h.dims = dims;
  h.n = static_cast<std::int64_t>(batch.size());
  h.counts.assign(dims == 1 ? static_cast<std::size_t>(bins) : static_cast<std::size_t>(bins) * bins, 0);
  for (const auto& r : batch.offspring) {
    const int i = cell_index(r.bc[0], bins, range);
    const int j = dims == 2 ? cell_index(r.bc[1], bins, range) : 0;
    if (i < 0 || j < 0) {
      ++h.out_of_range;
      continue;
    }
    ++h.counts[static_cast<std::size_t>(dims == 1 ? i : i * bins + j)];
  }
  return h;
}

std::string heatmap_to_csv(const Heatmap& h) {
  std::string out = std::to_string(h.bins) + "," + fmt(h.range) + "," + std::to_string(h.n) + "," +
                    std::to_string(h.out_of_range) + "," + std::to_string(h.dims) + "\n";
  const int rows = h.dims == 1 ? 1 : h.bins;
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < h.bins; ++c) {
      if (c) out += ",";
      out += std::to_string(h.counts[static_cast<std::size_t>(r * h.bins + c)]);
    }
    out += "\n";
  }
  return out;
}

Heatmap heatmap_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("heatmap csv: empty input");
  const auto meta = split_csv(line);
  if (meta.size() != 5) throw ValidationError("heatmap csv: metadata row needs 5 values");
  Heatmap h;
  h.bins = parse_cell<int>(meta[0]);
  h.range = parse_cell<double>(meta[1]);
  h.n = parse_cell<std::int64_t>(meta[2]);
  h.out_of_range = parse_cell<std::int64_t>(meta[3]);
  h.dims = parse_cell<int>(meta[4]);
  if (h.bins < 1 || (h.dims != 1 && h.dims != 2)) throw ValidationError("heatmap csv: bad metadata");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (static_cast<int>(cells.size()) != h.bins) throw ValidationError("heatmap csv: row width differs from bins");
    for (const auto& c : cells) h.counts.push_back(parse_cell<std::int64_t>(c));
  }
  const std::size_t expected = h.dims == 1 ? static_cast<std::size_t>(h.bins) : static_cast<std::size_t>(h.bins) * h.bins;
  if (h.counts.size() != expected) throw ValidationError("heatmap csv: wrong number of cells");
  return h;
}

EvalBatch evaluate_checkpoint(const Checkpoint& state, std::size_t n, std::uint64_t seed, int workers) {
  const auto env = make_environment(state.config);
  EvalOptions options;
  options.mirrored = state.config.mirrored;
  return evaluate_population(state.dist, *env, state.normalizer, n, seed, state.generation, workers, options);
}

Checkpoint split_checkpoint(const Checkpoint& state, std::size_t k, std::uint64_t seed) {
  const auto* iso = std::get_if<IsoGaussian>(&state.dist);
  if (!iso) throw ValidationError("split needs a unimodal population");
  Checkpoint out = state;
  out.dist = split_population(*iso, k, seed);
  out.config.mixture_k = static_cast<std::int64_t>(k);
  out.optimizer = OptimizerState{};
  for (std::size_t c = 0; c < k; ++c) {
    out.optimizer.m.push_back(ParamVec::Zero(iso->mean.size()));
    out.optimizer.v.push_back(ParamVec::Zero(iso->mean.size()));
  }
  out.grad_norms.clear();
  return out;
}

std::vector<Eigen::VectorXd> component_mean_bcs(const Checkpoint& state, std::size_t n, std::uint64_t seed,
                                                int workers) {
  const auto env = make_environment(state.config);
  std::vector<Eigen::VectorXd> out;
  const auto means = component_means(state.dist);
  for (std::size_t c = 0; c < means.size(); ++c) {
    const PopulationDistribution comp = IsoGaussian{means[c], sigma_of(state.dist)};
    const EvalBatch batch = evaluate_population(comp, *env, state.normalizer, n, mix(seed, c), 0, workers);
    out.push_back(batch.bc_matrix().colwise().mean().transpose());
  }
  return out;
}

}  // namespace evoes
