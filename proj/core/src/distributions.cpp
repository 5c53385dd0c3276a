#include "evoes/distributions.hpp"

#include "evoes/error.hpp"
#include "evoes/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace evoes {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};

double iso_log_density(const ParamVec& mean, double sigma, const ParamVec& z) {
  const auto d = static_cast<double>(mean.size());
  const double var = sigma * sigma;
  return -0.5 * d * std::log(2.0 * std::numbers::pi * var) - 0.5 * (z - mean).squaredNorm() / var;
}

void check_dim(const PopulationDistribution& dist, const ParamVec& z) {
  if (static_cast<std::size_t>(z.size()) != dim(dist)) {
    throw ValidationError("point has dimension " + std::to_string(z.size()) +
                          " but the distribution has dimension " + std::to_string(dim(dist)));
  }
}

void check_positive_sigma(const PopulationDistribution& dist) {
  if (!(sigma_of(dist) > 0.0)) {
    throw ValidationError("density and score require sigma > 0");
  }
}

std::vector<double> component_log_densities(const PopulationDistribution& dist, const ParamVec& z) {
  const double sigma = sigma_of(dist);
  std::vector<double> out;
  for (const auto& m : component_means(dist)) out.push_back(iso_log_density(m, sigma, z));
  return out;
}

}  // namespace

std::size_t dim(const PopulationDistribution& dist) {
  return static_cast<std::size_t>(component_means(dist).front().size());
}

double sigma_of(const PopulationDistribution& dist) {
  return std::visit([](const auto& d) { return d.sigma; }, dist);
}

std::size_t num_components(const PopulationDistribution& dist) {
  return component_means(dist).size();
}

std::span<const ParamVec> component_means(const PopulationDistribution& dist) {
  return std::visit(Overloaded{
                        [](const IsoGaussian& g) { return std::span<const ParamVec>(&g.mean, 1); },
                        [](const GaussianMixture& m) { return std::span<const ParamVec>(m.means); },
                    },
                    dist);
}

std::span<ParamVec> component_means(PopulationDistribution& dist) {
  return std::visit(Overloaded{
                        [](IsoGaussian& g) { return std::span<ParamVec>(&g.mean, 1); },
                        [](GaussianMixture& m) { return std::span<ParamVec>(m.means); },
                    },
                    dist);
}

void validate(const PopulationDistribution& dist) {
  const double sigma = sigma_of(dist);
  if (!std::isfinite(sigma) || sigma < 0.0) throw ValidationError("sigma must be finite and >= 0");
  if (const auto* m = std::get_if<GaussianMixture>(&dist); m && m->means.size() < 2) {
    throw ValidationError("a Gaussian mixture needs at least 2 components");
  }
  const auto means = component_means(dist);
  if (means.empty() || means.front().size() == 0) throw ValidationError("distribution dimension must be >= 1");
  for (const auto& m : means) {
    if (m.size() != means.front().size()) throw ValidationError("mixture components differ in dimension");
    if (!m.allFinite()) throw ValidationError("distribution mean has non-finite entries");
  }
}

std::pair<std::uint64_t, double> offspring_stream(std::uint64_t batch_seed, std::size_t index,
                                                  bool mirrored) {
  if (mirrored) {
    const std::size_t base = index - index % 2;
    return {mix(batch_seed, base), index % 2 == 0 ? 1.0 : -1.0};
  }
  return {mix(batch_seed, index), 1.0};
}

std::pair<std::size_t, ParamVec> regenerate(const PopulationDistribution& dist,
                                            std::uint64_t stream_seed, double sign) {
  Rng rng(stream_seed);
  const auto means = component_means(dist);
  std::size_t component = 0;
  if (means.size() > 1) component = static_cast<std::size_t>(rng.below(means.size()));
  const ParamVec& mean = means[component];
  const double scale = sign * sigma_of(dist);
  ParamVec z(mean.size());
  for (Eigen::Index j = 0; j < mean.size(); ++j) z[j] = mean[j] + scale * rng.normal();
  return {component, std::move(z)};
}

std::vector<Offspring> sample_offspring(const PopulationDistribution& dist, std::size_t n,
                                        std::uint64_t seed, bool mirrored) {
  if (n == 0) throw ValidationError("sample_offspring needs n >= 1");
  std::vector<Offspring> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto [stream, sign] = offspring_stream(seed, i, mirrored);
    auto [component, genome] = regenerate(dist, stream, sign);
    out.push_back(Offspring{i, component, stream, sign, std::move(genome)});
  }
  return out;
}

double log_density(const PopulationDistribution& dist, const ParamVec& z) {
  check_dim(dist, z);
  check_positive_sigma(dist);
  const auto logs = component_log_densities(dist, z);
  if (logs.size() == 1) return logs.front();
  const double top = *std::max_element(logs.begin(), logs.end());
  double acc = 0.0;
  for (double l : logs) acc += std::exp(l - top);
  return top + std::log(acc) - std::log(static_cast<double>(logs.size()));
}

std::vector<double> responsibilities(const PopulationDistribution& dist, const ParamVec& z) {
  check_dim(dist, z);
  check_positive_sigma(dist);
  auto logs = component_log_densities(dist, z);
  const double top = *std::max_element(logs.begin(), logs.end());
  double total = 0.0;
  for (double& l : logs) {
    l = std::exp(l - top);
    total += l;
  }
  for (double& l : logs) l /= total;
  return logs;
}

std::vector<ParamVec> score(const PopulationDistribution& dist, const ParamVec& z) {
  const auto resp = responsibilities(dist, z);
  const double inv_var = 1.0 / (sigma_of(dist) * sigma_of(dist));
  const auto means = component_means(dist);
  std::vector<ParamVec> out;
  out.reserve(means.size());
  for (std::size_t k = 0; k < means.size(); ++k) out.push_back(resp[k] * inv_var * (z - means[k]));
  return out;
}

ScoreBatch score_batch(const PopulationDistribution& dist, std::span<const ParamVec> genomes) {
  const auto k = num_components(dist);
  const auto d = static_cast<Eigen::Index>(dim(dist));
  const auto n = static_cast<Eigen::Index>(genomes.size());
  ScoreBatch out;
  out.per_component.assign(k, Eigen::MatrixXd(n, d));
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto s = score(dist, genomes[static_cast<std::size_t>(i)]);
    for (std::size_t c = 0; c < k; ++c) out.per_component[c].row(i) = s[c].transpose();
  }
  return out;
}

GaussianMixture split_population(const IsoGaussian& parent, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw ValidationError("split_population needs k >= 2");
  GaussianMixture out;
  out.sigma = parent.sigma;
  for (auto& child : sample_offspring(PopulationDistribution{parent}, k, seed)) {
    out.means.push_back(std::move(child.genome));
  }
  return out;
}

}  // namespace evoes
