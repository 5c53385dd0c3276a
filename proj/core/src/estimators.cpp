#include "evoes/estimators.hpp"

#include "evoes/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

namespace evoes {

namespace {

// Pairs with |u|^2 / 2h^2 above this are skipped. Each skipped term is below
// e^-50 phi(0), and every density includes the self term phi(0)/n, so the
// relative error of any p_i is below n e^-50 (< 2e-16 for n <= 1e6).
constexpr double kKernelCutoff = 50.0;

void check_rows(std::size_t n, const ScoreBatch& scores) {
  if (scores.components() == 0) throw ValidationError("score batch has no components");
  if (scores.rows() != n) {
    throw ValidationError("batch has " + std::to_string(n) + " rows but scores have " +
                          std::to_string(scores.rows()));
  }
}

std::vector<std::size_t> order_by_first_column(const BCMatrix& bcs) {
  std::vector<std::size_t> order(static_cast<std::size_t>(bcs.rows()));
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return bcs(static_cast<Eigen::Index>(a), 0) < bcs(static_cast<Eigen::Index>(b), 0);
  });
  return order;
}

// Calls fn(i, j, phi) once for every unordered pair i != j with a nonzero
// kernel value.
template <class Fn>
void for_each_kernel_pair(const BCMatrix& bcs, const std::vector<std::size_t>& order, double h,
                          Fn&& fn) {
  const Eigen::Index d = bcs.cols();
  const double inv_two_var = 0.5 / (h * h);
  const double norm = std::pow(2.0 * std::numbers::pi * h * h, -0.5 * static_cast<double>(d));
  const double radius = std::sqrt(kKernelCutoff / inv_two_var);
  const std::size_t n = order.size();
  for (std::size_t a = 0; a < n; ++a) {
    const auto i = static_cast<Eigen::Index>(order[a]);
    const double xi = bcs(i, 0);
    for (std::size_t b = a + 1; b < n; ++b) {
      const auto j = static_cast<Eigen::Index>(order[b]);
      if (bcs(j, 0) - xi > radius) break;
      double sq = 0.0;
      for (Eigen::Index c = 0; c < d; ++c) {
        const double u = bcs(j, c) - bcs(i, c);
        sq += u * u;
      }
      const double e = sq * inv_two_var;
      if (e > kKernelCutoff) continue;
      fn(order[a], order[b], norm * std::exp(-e));
    }
  }
}

}  // namespace

Estimator estimator_from_string(std::string_view name) {
  if (name == "es" || name == "standard_es") return Estimator::es;
  if (name == "maxvar" || name == "maxvar_ees") return Estimator::maxvar;
  if (name == "maxent" || name == "maxent_ees") return Estimator::maxent;
  throw ValidationError("unknown estimator '" + std::string(name) + "'");
}

std::string_view to_string(Estimator e) {
  switch (e) {
    case Estimator::es: return "es";
    case Estimator::maxvar: return "maxvar";
    case Estimator::maxent: return "maxent";
  }
  return "?";
}

double GradEstimate::norm() const {
  double sq = 0.0;
  for (const auto& g : grad) sq += g.squaredNorm();
  return std::sqrt(sq);
}

std::vector<ParamVec> weighted_score_mean(std::span<const double> weights, const ScoreBatch& scores) {
  check_rows(weights.size(), scores);
  const auto n = static_cast<Eigen::Index>(weights.size());
  const Eigen::Map<const Eigen::VectorXd> w(weights.data(), n);
  std::vector<ParamVec> out;
  out.reserve(scores.components());
  for (const auto& s : scores.per_component) {
    ParamVec g = ParamVec::Zero(s.cols());
    // Fixed accumulation order by offspring index.
    for (Eigen::Index i = 0; i < n; ++i) g += w[i] * s.row(i).transpose();
    out.push_back(g / static_cast<double>(n));
  }
  return out;
}

GradEstimate es_gradient(std::span<const double> shaped_fitness, const ScoreBatch& scores) {
  check_rows(shaped_fitness.size(), scores);
  GradEstimate out;
  out.n_samples = shaped_fitness.size();
  double sum = 0.0;
  for (double f : shaped_fitness) sum += f;
  out.loss = sum / static_cast<double>(shaped_fitness.size());
  out.grad = weighted_score_mean(shaped_fitness, scores);
  return out;
}

GradEstimate maxvar_gradient(const BCMatrix& bcs, const ScoreBatch& scores, bool whiten_bcs) {
  const auto n = static_cast<std::size_t>(bcs.rows());
  if (n < 2) throw ValidationError("maxvar_gradient needs at least 2 offspring");
  check_rows(n, scores);
  auto [white, stats] = whiten(bcs);
  GradEstimate out;
  out.n_samples = n;
  const BCMatrix raw_centered = bcs.rowwise() - stats.mean.transpose();
  out.loss = raw_centered.squaredNorm() / static_cast<double>(n);
  BCMatrix centered = whiten_bcs ? white : raw_centered;
  if (whiten_bcs) {
    // A constant column whitens to ~0 already; zero it exactly.
    for (Eigen::Index c = 0; c < stats.std.size(); ++c) {
      if (stats.std[c] <= kWhitenStdFloor) centered.col(c).setZero();
    }
  }
  std::vector<double> weights(n);
  for (std::size_t i = 0; i < n; ++i) weights[i] = centered.row(static_cast<Eigen::Index>(i)).squaredNorm();
  out.grad = weighted_score_mean(weights, scores);
  return out;
}

Eigen::VectorXd kde_density(const BCMatrix& bcs, double bandwidth) {
  if (!(bandwidth > 0.0)) throw ValidationError("kernel bandwidth must be > 0");
  if (bcs.rows() < 1 || bcs.cols() < 1) throw ValidationError("kde needs a non-empty BC matrix");
  const auto order = order_by_first_column(bcs);
  const double self = gaussian_kernel_sq(0.0, static_cast<int>(bcs.cols()), bandwidth);
  Eigen::VectorXd p = Eigen::VectorXd::Constant(bcs.rows(), self);
  for_each_kernel_pair(bcs, order, bandwidth, [&](std::size_t i, std::size_t j, double phi) {
    p[static_cast<Eigen::Index>(i)] += phi;
    p[static_cast<Eigen::Index>(j)] += phi;
  });
  return p / static_cast<double>(bcs.rows());
}

double kde_entropy(const BCMatrix& bcs, double bandwidth) {
  const Eigen::VectorXd p = kde_density(bcs, bandwidth);
  double acc = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) acc += std::log(p[i]);
  return -acc / static_cast<double>(p.size());
}

GradEstimate maxent_gradient(const BCMatrix& bcs, const ScoreBatch& scores, double bandwidth) {
  const auto n = static_cast<std::size_t>(bcs.rows());
  if (n < 2) throw ValidationError("maxent_gradient needs at least 2 offspring");
  check_rows(n, scores);
  if (!bcs.allFinite()) throw NumericalError("maxent_gradient got non-finite behaviors");
  if (!(bandwidth > 0.0)) throw ValidationError("kernel bandwidth must be > 0");

  const auto order = order_by_first_column(bcs);
  const double self = gaussian_kernel_sq(0.0, static_cast<int>(bcs.cols()), bandwidth);
  const double inv_n = 1.0 / static_cast<double>(n);

  Eigen::VectorXd p = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n), self);
  for_each_kernel_pair(bcs, order, bandwidth, [&](std::size_t i, std::size_t j, double phi) {
    p[static_cast<Eigen::Index>(i)] += phi;
    p[static_cast<Eigen::Index>(j)] += phi;
  });
  p *= inv_n;

  const Eigen::VectorXd inv_p = p.cwiseInverse();
  Eigen::VectorXd q = self * inv_p;  // q_j = sum_i phi_ij / p_i
  for_each_kernel_pair(bcs, order, bandwidth, [&](std::size_t i, std::size_t j, double phi) {
    q[static_cast<Eigen::Index>(j)] += phi * inv_p[static_cast<Eigen::Index>(i)];
    q[static_cast<Eigen::Index>(i)] += phi * inv_p[static_cast<Eigen::Index>(j)];
  });

  GradEstimate out;
  out.n_samples = n;
  std::vector<double> weights(n);
  double log_sum = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const auto jj = static_cast<Eigen::Index>(j);
    const double lp = std::log(p[jj]);
    log_sum += lp;
    weights[j] = -(lp + inv_n * q[jj]);
  }
  out.loss = -log_sum * inv_n;
  out.grad = weighted_score_mean(weights, scores);
  return out;
}

}  // namespace evoes
