#pragma once

#include "evoes/distributions.hpp"
#include "evoes/shaping.hpp"

#include <span>
#include <string_view>
#include <vector>

namespace evoes {

enum class Estimator { es, maxvar, maxent };

Estimator estimator_from_string(std::string_view name);
std::string_view to_string(Estimator e);

struct GradEstimate {
  double loss = 0.0;
  std::vector<ParamVec> grad;  // one per trainable mean
  std::size_t n_samples = 0;

  /// Euclidean norm over all components.
  double norm() const;
};

/// grad_c = (1/n) sum_i f_i s_i^c, loss = mean(f).
GradEstimate es_gradient(std::span<const double> shaped_fitness, const ScoreBatch& scores);

/// Trace-of-covariance objective. With `whiten_bcs` the weights are the
/// squared norms of the whitened rows, otherwise of the centered rows.
/// The reported loss is always the trace of the raw population covariance.
GradEstimate maxvar_gradient(const BCMatrix& bcs, const ScoreBatch& scores, bool whiten_bcs = true);

/// Kernel-density entropy objective on already-preprocessed BCs.
/// loss = -(1/n) sum_i log p_i with p_i = (1/n) sum_j phi(B_j - B_i) (self term
/// included); grad_c = -(1/n) sum_j w_j s_j^c, w_j = log p_j + (1/n) sum_i phi_ij / p_i.
GradEstimate maxent_gradient(const BCMatrix& bcs, const ScoreBatch& scores, double bandwidth);

/// Per-row kernel density p_i. Pairs farther apart than 10 bandwidths are
/// skipped via a sweep over rows sorted by the first coordinate; the result
/// matches the dense sum to double precision for n <= 1e6.
Eigen::VectorXd kde_density(const BCMatrix& bcs, double bandwidth);

/// -mean log kde_density.
double kde_entropy(const BCMatrix& bcs, double bandwidth);

/// sum_i w_i s_i^c / n for every component c.
std::vector<ParamVec> weighted_score_mean(std::span<const double> weights, const ScoreBatch& scores);

}  // namespace evoes
