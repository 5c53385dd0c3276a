#pragma once

#include "evoes/distributions.hpp"
#include "evoes/estimators.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace evoes {

/// Closed-form genome -> (behavior, fitness) map for estimator checks.
struct SyntheticTask {
  std::string name;
  std::size_t genome_dim = 1;
  int bc_dim = 1;
  std::function<Eigen::VectorXd(const ParamVec&)> behavior;
  std::function<double(const ParamVec&)> fitness;
};

/// Known names:
///   linear       f(z) = sum_j (j+1) z_j, B(z) = z
///   quadratic    f(z) = |z|^2, B(z) = z
///   poly         B_j(z) = z_j + 0.5 z_j^2, f = sum_j B_j
///   lognormal    B(z) = 500 exp(c.z), c_j = 1/sqrt(dim), f = B
///   interference B(z) = 5 sin(z_0/5) sin(20 z_0), f = 0 (dim must be 1)
SyntheticTask make_synthetic_task(std::string_view name, std::size_t dim);

struct GradcheckOptions {
  bool rank_shaping = true;  // es only
  bool whiten = true;        // maxvar / maxent
  double bandwidth = 1.0;    // maxent
  bool mirrored = true;
};

/// Score-function estimate on n offspring of `dist` drawn with `seed`.
GradEstimate score_function_gradient(Estimator estimator, const IsoGaussian& dist, const SyntheticTask& task,
                                     std::size_t n, std::uint64_t seed, const GradcheckOptions& options = {});

/// Central differences of the Monte-Carlo objective at mean +- h e_k, reusing
/// the same standard-normal draws at every evaluation point. Shaping and
/// whitening statistics are frozen at the unperturbed batch, which is the
/// quantity the score-function estimators differentiate.
ParamVec finite_difference_check(Estimator estimator, const IsoGaussian& dist, const SyntheticTask& task,
                                 std::size_t n, double h, std::uint64_t seed, const GradcheckOptions& options = {});

struct GradcheckCase {
  std::string name;
  Estimator estimator = Estimator::es;
  std::size_t dim = 1;
  ParamVec score_function;
  ParamVec finite_difference;
  double cosine = 0.0;
  double magnitude_error = 0.0;  // | |sf| - |fd| | / |fd|
};

double cosine_similarity(const ParamVec& a, const ParamVec& b);

/// es, maxvar and maxent on 1-D and 5-D tasks at sample size n.
std::vector<GradcheckCase> run_gradcheck_suite(std::size_t n, std::uint64_t seed);

}  // namespace evoes
