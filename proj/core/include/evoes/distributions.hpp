#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <span>
#include <variant>
#include <vector>

namespace evoes {

/// Flat genome / search-space point.
using ParamVec = Eigen::VectorXd;

/// Isotropic Gaussian N(mean, sigma^2 I). Only the mean is trainable.
struct IsoGaussian {
  ParamVec mean;
  double sigma = 1.0;
};

/// Equal-weight mixture of isotropic Gaussians sharing one sigma.
struct GaussianMixture {
  std::vector<ParamVec> means;
  double sigma = 1.0;
};

using PopulationDistribution = std::variant<IsoGaussian, GaussianMixture>;

/// One sampled genome together with how to regenerate it.
struct Offspring {
  std::size_t index = 0;
  std::size_t component = 0;
  std::uint64_t stream_seed = 0;  // seed of the noise stream
  double sign = 1.0;              // -1 for the mirrored half of a pair
  ParamVec genome;
};

/// Per-component score vectors for a batch. `per_component[c]` is an
/// (n x dim) matrix whose row i is the score of offspring i with respect to
/// component mean c.
struct ScoreBatch {
  std::vector<Eigen::MatrixXd> per_component;

  std::size_t rows() const { return per_component.empty() ? 0 : per_component.front().rows(); }
  std::size_t components() const { return per_component.size(); }
};

std::size_t dim(const PopulationDistribution& dist);
double sigma_of(const PopulationDistribution& dist);
std::size_t num_components(const PopulationDistribution& dist);
/// Trainable means; a single element for IsoGaussian.
std::span<const ParamVec> component_means(const PopulationDistribution& dist);
std::span<ParamVec> component_means(PopulationDistribution& dist);

/// Throws ValidationError unless sigma >= 0, means are finite and share a
/// dimension, and a mixture has at least two components.
void validate(const PopulationDistribution& dist);

/// Draws (component, genome) from the stream seeded by `stream_seed`. For
/// mixtures the component is drawn first from the same stream.
/// `sign = -1` yields the antithetic partner.
std::pair<std::size_t, ParamVec> regenerate(const PopulationDistribution& dist,
                                            std::uint64_t stream_seed, double sign = 1.0);

/// Samples n offspring. Offspring i uses stream mix(seed, i); with
/// `mirrored`, odd i reuses the stream of i-1 with the noise negated.
/// The result depends only on (dist, n, seed, mirrored).
std::vector<Offspring> sample_offspring(const PopulationDistribution& dist, std::size_t n,
                                        std::uint64_t seed, bool mirrored = false);

/// Stream seed and sign used for offspring `index` of a batch seeded with
/// `batch_seed`.
std::pair<std::uint64_t, double> offspring_stream(std::uint64_t batch_seed, std::size_t index,
                                                  bool mirrored);

double log_density(const PopulationDistribution& dist, const ParamVec& z);

/// Posterior component responsibilities at z (a single 1.0 for IsoGaussian).
/// Computed in log space with max subtraction.
std::vector<double> responsibilities(const PopulationDistribution& dist, const ParamVec& z);

/// Gradient of log density with respect to each component mean:
/// r_k(z) (z - mu_k) / sigma^2.
std::vector<ParamVec> score(const PopulationDistribution& dist, const ParamVec& z);

/// Scores for a batch of genomes, row i for genome i.
ScoreBatch score_batch(const PopulationDistribution& dist, std::span<const ParamVec> genomes);

/// Mixture of k components whose means are independent draws from `parent`.
GaussianMixture split_population(const IsoGaussian& parent, std::size_t k, std::uint64_t seed);

}  // namespace evoes
