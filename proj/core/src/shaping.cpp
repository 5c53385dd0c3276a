#include "evoes/shaping.hpp"

#include "evoes/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace evoes {

std::vector<double> rank_normalize(std::span<const double> values) {
  const std::size_t n = values.size();
  if (n == 0) throw ValidationError("rank_normalize needs at least one value");
  for (double v : values) {
    if (!std::isfinite(v)) throw ValidationError("rank_normalize got a non-finite value");
  }
  std::vector<double> out(n, 0.0);
  if (n == 1) return out;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });

  const double denom = static_cast<double>(n - 1);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i + 1;
    while (j < n && values[order[j]] == values[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j - 1);
    for (std::size_t k = i; k < j; ++k) out[order[k]] = rank / denom - 0.5;
    i = j;
  }
  return out;
}

std::pair<BCMatrix, WhitenStats> whiten(const BCMatrix& bcs) {
  if (bcs.rows() < 2) throw ValidationError("whiten needs at least 2 rows");
  if (bcs.cols() < 1) throw ValidationError("whiten needs at least 1 column");
  const double n = static_cast<double>(bcs.rows());
  WhitenStats stats;
  stats.mean = bcs.colwise().sum().transpose() / n;
  stats.std.resize(bcs.cols());
  for (Eigen::Index c = 0; c < bcs.cols(); ++c) {
    const double var = (bcs.col(c).array() - stats.mean[c]).square().sum() / n;
    stats.std[c] = std::max(std::sqrt(var), kWhitenStdFloor);
  }
  return {apply_whiten(bcs, stats), std::move(stats)};
}

BCMatrix apply_whiten(const BCMatrix& bcs, const WhitenStats& stats) {
  BCMatrix out(bcs.rows(), bcs.cols());
  for (Eigen::Index c = 0; c < bcs.cols(); ++c) {
    out.col(c) = (bcs.col(c).array() - stats.mean[c]) / stats.std[c];
  }
  return out;
}

BCMatrix unwhiten(const BCMatrix& white, const WhitenStats& stats) {
  BCMatrix out(white.rows(), white.cols());
  for (Eigen::Index c = 0; c < white.cols(); ++c) {
    out.col(c) = white.col(c).array() * stats.std[c] + stats.mean[c];
  }
  return out;
}

double gaussian_kernel_sq(double squared_norm, int dims, double bandwidth) {
  if (!(bandwidth > 0.0)) throw ValidationError("kernel bandwidth must be > 0");
  const double var = bandwidth * bandwidth;
  return std::pow(2.0 * std::numbers::pi * var, -0.5 * dims) * std::exp(-0.5 * squared_norm / var);
}

double gaussian_kernel(std::span<const double> u, double bandwidth) {
  double sq = 0.0;
  for (double x : u) sq += x * x;
  return gaussian_kernel_sq(sq, static_cast<int>(u.size()), bandwidth);
}

}  // namespace evoes
