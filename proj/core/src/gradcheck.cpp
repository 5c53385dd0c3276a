#include "evoes/gradcheck.hpp"

#include "evoes/envs.hpp"
#include "evoes/error.hpp"
#include "evoes/shaping.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace evoes {

namespace {

constexpr double kLognormalScale = 5e2;

// Standard-normal draws matching sample_offspring(dist, n, seed, mirrored).
std::vector<ParamVec> unit_draws(std::size_t dim, std::size_t n, std::uint64_t seed, bool mirrored) {
  const PopulationDistribution unit = IsoGaussian{ParamVec::Zero(static_cast<Eigen::Index>(dim)), 1.0};
  std::vector<ParamVec> out;
  out.reserve(n);
  for (auto& o : sample_offspring(unit, n, seed, mirrored)) out.push_back(std::move(o.genome));
  return out;
}

BCMatrix behaviors(const SyntheticTask& task, const std::vector<ParamVec>& genomes) {
  BCMatrix b(static_cast<Eigen::Index>(genomes.size()), task.bc_dim);
  for (std::size_t i = 0; i < genomes.size(); ++i) b.row(static_cast<Eigen::Index>(i)) = task.behavior(genomes[i]).transpose();
  return b;
}

// Kernel entropy evaluated independently of the estimator code: per-point
// windows over the sorted values in 1-D, all pairs otherwise.
double reference_entropy(const BCMatrix& b, double h) {
  const auto n = b.rows();
  const double var = h * h;
  const double norm = std::pow(2.0 * std::numbers::pi * var, -0.5 * static_cast<double>(b.cols()));
  double total = 0.0;
  if (b.cols() == 1) {
    std::vector<double> v(b.data(), b.data() + n);
    std::sort(v.begin(), v.end());
    const double radius = h * std::sqrt(2.0 * 50.0);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto lo = std::lower_bound(v.begin(), v.end(), v[i] - radius);
      const auto hi = std::upper_bound(v.begin(), v.end(), v[i] + radius);
      double p = 0.0;
      for (auto it = lo; it != hi; ++it) {
        const double u = *it - v[static_cast<std::size_t>(i)];
        p += std::exp(-0.5 * u * u / var);
      }
      total += std::log(norm * p / static_cast<double>(n));
    }
  } else {
    for (Eigen::Index i = 0; i < n; ++i) {
      double p = 0.0;
      for (Eigen::Index j = 0; j < n; ++j) p += std::exp(-0.5 * (b.row(j) - b.row(i)).squaredNorm() / var);
      total += std::log(norm * p / static_cast<double>(n));
    }
  }
  return -total / static_cast<double>(n);
}

// Piecewise-linear empirical CDF of the base fitness, mapped to [-0.5, 0.5].
class RankMap {
 public:
  explicit RankMap(std::vector<double> values) : v_(std::move(values)) { std::sort(v_.begin(), v_.end()); }

  double operator()(double f) const {
    const double last = static_cast<double>(v_.size() - 1);
    if (v_.size() == 1) return 0.0;
    if (f <= v_.front()) return -0.5;
    if (f >= v_.back()) return 0.5;
    const auto it = std::upper_bound(v_.begin(), v_.end(), f);
    const auto k = static_cast<std::size_t>(it - v_.begin()) - 1;
    const double gap = v_[k + 1] - v_[k];
    const double rank = static_cast<double>(k) + (gap > 0.0 ? (f - v_[k]) / gap : 0.0);
    return rank / last - 0.5;
  }

 private:
  std::vector<double> v_;
};

}  // namespace

SyntheticTask make_synthetic_task(std::string_view name, std::size_t dim) {
  if (dim < 1) throw ValidationError("synthetic task dimension must be >= 1");
  SyntheticTask t;
  t.name = std::string(name);
  t.genome_dim = dim;
  const int d = static_cast<int>(dim);
  if (name == "linear") {
    t.bc_dim = d;
    t.behavior = [](const ParamVec& z) { return Eigen::VectorXd(z); };
    t.fitness = [](const ParamVec& z) {
      double f = 0.0;
      for (Eigen::Index j = 0; j < z.size(); ++j) f += static_cast<double>(j + 1) * z[j];
      return f;
    };
  } else if (name == "quadratic") {
    t.bc_dim = d;
    t.behavior = [](const ParamVec& z) { return Eigen::VectorXd(z); };
    t.fitness = [](const ParamVec& z) { return z.squaredNorm(); };
  } else if (name == "poly") {
    t.bc_dim = d;
    t.behavior = [](const ParamVec& z) { return Eigen::VectorXd(z.array() + 0.5 * z.array().square()); };
    t.fitness = [](const ParamVec& z) { return (z.array() + 0.5 * z.array().square()).sum(); };
  } else if (name == "lognormal") {
    t.bc_dim = 1;
    const double c = 1.0 / std::sqrt(static_cast<double>(dim));
    t.behavior = [c](const ParamVec& z) { return Eigen::VectorXd::Constant(1, kLognormalScale * std::exp(c * z.sum())); };
    t.fitness = [c](const ParamVec& z) { return kLognormalScale * std::exp(c * z.sum()); };
  } else if (name == "interference") {
    if (dim != 1) throw ValidationError("the interference task is 1-D");
    t.bc_dim = 1;
    t.behavior = [](const ParamVec& z) { return Eigen::VectorXd::Constant(1, interference_behavior(z[0])); };
    t.fitness = [](const ParamVec&) { return 0.0; };
  } else {
    throw ValidationError("unknown synthetic task '" + std::string(name) + "'");
  }
  return t;
}

GradEstimate score_function_gradient(Estimator estimator, const IsoGaussian& dist, const SyntheticTask& task,
                                     std::size_t n, std::uint64_t seed, const GradcheckOptions& options) {
  const PopulationDistribution pd = dist;
  std::vector<ParamVec> genomes;
  genomes.reserve(n);
  for (auto& o : sample_offspring(pd, n, seed, options.mirrored)) genomes.push_back(std::move(o.genome));
  const ScoreBatch scores = score_batch(pd, genomes);
  switch (estimator) {
    case Estimator::es: {
      std::vector<double> f(n);
      for (std::size_t i = 0; i < n; ++i) f[i] = task.fitness(genomes[i]);
      return es_gradient(options.rank_shaping ? rank_normalize(f) : f, scores);
    }
    case Estimator::maxvar: return maxvar_gradient(behaviors(task, genomes), scores, options.whiten);
    case Estimator::maxent: {
      BCMatrix b = behaviors(task, genomes);
      if (options.whiten) b = whiten(b).first;
      return maxent_gradient(b, scores, options.bandwidth);
    }
  }
  throw ValidationError("unknown estimator");
}

ParamVec finite_difference_check(Estimator estimator, const IsoGaussian& dist, const SyntheticTask& task,
                                 std::size_t n, double h, std::uint64_t seed, const GradcheckOptions& options) {
  if (!(h > 0.0)) throw ValidationError("finite-difference step must be > 0");
  if (n < 2) throw ValidationError("finite-difference check needs n >= 2");
  const auto d = static_cast<std::size_t>(dist.mean.size());
  const auto eps = unit_draws(d, n, seed, options.mirrored);
  auto genomes_at = [&](const ParamVec& mu) {
    std::vector<ParamVec> z;
    z.reserve(n);
    for (const auto& e : eps) z.push_back(mu + dist.sigma * e);
    return z;
  };

  const auto base = genomes_at(dist.mean);
  std::vector<double> base_fitness(n);
  for (std::size_t i = 0; i < n; ++i) base_fitness[i] = task.fitness(base[i]);
  const RankMap rank(base_fitness);
  const WhitenStats stats = whiten(behaviors(task, base)).second;

  auto objective = [&](const ParamVec& mu) {
    const auto z = genomes_at(mu);
    switch (estimator) {
      case Estimator::es: {
        double acc = 0.0;
        for (const auto& g : z) {
          const double f = task.fitness(g);
          acc += options.rank_shaping ? rank(f) : f;
        }
        return acc / static_cast<double>(n);
      }
      case Estimator::maxvar: {
        BCMatrix b = behaviors(task, z);
        b = b.rowwise() - stats.mean.transpose();
        if (options.whiten) b = b.array().rowwise() / stats.std.transpose().array();
        return b.squaredNorm() / static_cast<double>(n);
      }
      case Estimator::maxent: {
        BCMatrix b = behaviors(task, z);
        if (options.whiten) b = apply_whiten(b, stats);
        return reference_entropy(b, options.bandwidth);
      }
    }
    return 0.0;
  };

  ParamVec grad(static_cast<Eigen::Index>(d));
  for (std::size_t k = 0; k < d; ++k) {
    ParamVec up = dist.mean;
    ParamVec down = dist.mean;
    up[static_cast<Eigen::Index>(k)] += h;
    down[static_cast<Eigen::Index>(k)] -= h;
    grad[static_cast<Eigen::Index>(k)] = (objective(up) - objective(down)) / (2.0 * h);
  }
  return grad;
}

double cosine_similarity(const ParamVec& a, const ParamVec& b) {
  const double denom = a.norm() * b.norm();
  return denom > 0.0 ? a.dot(b) / denom : 0.0;
}

std::vector<GradcheckCase> run_gradcheck_suite(std::size_t n, std::uint64_t seed) {
  struct Spec {
    Estimator est;
    const char* task;
    GradcheckOptions opts;
  };
  const Spec specs[] = {
      {Estimator::es, "linear", {true, true, 1.0, true}},
      {Estimator::maxvar, "poly", {true, true, 1.0, true}},
      {Estimator::maxent, "lognormal", {true, false, 1.0, true}},
  };
  std::vector<GradcheckCase> out;
  for (const auto& s : specs) {
    for (std::size_t d : {std::size_t{1}, std::size_t{5}}) {
      IsoGaussian dist;
      dist.sigma = 0.5;
      dist.mean = d == 1 ? ParamVec::Constant(1, 1.0) : ParamVec{{0.5, -0.3, 0.2, 0.8, -0.1}};
      const SyntheticTask task = make_synthetic_task(s.task, d);
      GradcheckCase c;
      c.name = std::string(to_string(s.est)) + "/" + s.task + "/" + std::to_string(d) + "d";
      c.estimator = s.est;
      c.dim = d;
      c.score_function = score_function_gradient(s.est, dist, task, n, seed, s.opts).grad.front();
      c.finite_difference = finite_difference_check(s.est, dist, task, n, dist.sigma / 100.0, seed, s.opts);
      c.cosine = cosine_similarity(c.score_function, c.finite_difference);
      const double fd_norm = c.finite_difference.norm();
      c.magnitude_error = fd_norm > 0.0 ? std::abs(c.score_function.norm() - fd_norm) / fd_norm : INFINITY;
      out.push_back(std::move(c));
    }
  }
  return out;
}

}  // namespace evoes
