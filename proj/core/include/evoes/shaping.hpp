#pragma once

#include <Eigen/Core>

#include <span>
#include <utility>
#include <vector>

namespace evoes {

/// n offspring x d behavior dimensions.
using BCMatrix = Eigen::MatrixXd;

inline constexpr double kWhitenStdFloor = 1e-8;

struct WhitenStats {
  Eigen::VectorXd mean;
  Eigen::VectorXd std;  // already floored
};

/// rank_i / (n - 1) - 0.5 with ties sharing their average rank. n == 1 gives 0.
std::vector<double> rank_normalize(std::span<const double> values);

/// Per-column standardization with the population (divisor n) std, floored
/// at kWhitenStdFloor. Needs n >= 2.
std::pair<BCMatrix, WhitenStats> whiten(const BCMatrix& bcs);

/// Applies stats computed elsewhere.
BCMatrix apply_whiten(const BCMatrix& bcs, const WhitenStats& stats);
BCMatrix unwhiten(const BCMatrix& white, const WhitenStats& stats);

/// Isotropic Gaussian kernel with standard deviation h.
double gaussian_kernel(std::span<const double> u, double bandwidth);
double gaussian_kernel_sq(double squared_norm, int dims, double bandwidth);

}  // namespace evoes
