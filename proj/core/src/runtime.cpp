#include "evoes/runtime.hpp"

#include "evoes/error.hpp"
#include "evoes/rng.hpp"

#include <atomic>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>

namespace evoes {

BCMatrix EvalBatch::bc_matrix() const {
  if (offspring.empty()) return {};
  BCMatrix m(static_cast<Eigen::Index>(offspring.size()), offspring.front().bc.size());
  for (std::size_t i = 0; i < offspring.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = offspring[i].bc.transpose();
  return m;
}

std::vector<double> EvalBatch::fitness() const {
  std::vector<double> out;
  out.reserve(offspring.size());
  for (const auto& r : offspring) out.push_back(r.fitness);
  return out;
}

int default_workers() {
  if (const char* env = std::getenv("EVOES_WORKERS")) {
    try {
      const int w = std::stoi(env);
      if (w >= 1) return w;
    } catch (const std::exception&) {
    }
    throw ValidationError("EVOES_WORKERS must be a positive integer, got '" + std::string(env) + "'");
  }
  return 1;
}

void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn) {
  if (workers < 1) throw ValidationError("workers must be >= 1");
  std::vector<std::exception_ptr> errors(n);
  auto guarded = [&](std::size_t i) {
    try {
      fn(i);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  const auto threads = std::min<std::size_t>(static_cast<std::size_t>(workers), n);
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) guarded(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) guarded(i);
      });
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

bool sampled_for_normalizer(std::uint64_t seed, double sign, double prob) {
  if (prob <= 0.0) return false;
  Rng rng(mix(seed, sign < 0.0 ? 0x6f62732dULL : 0x6f62732bULL));
  return rng.uniform() < prob;
}

EvalBatch evaluate_population(const PopulationDistribution& dist, const Environment& env,
                              const ObsNormalizer& normalizer, std::size_t n, std::uint64_t run_seed,
                              std::int64_t generation, int workers, const EvalOptions& options) {
  if (n < 1) throw ValidationError("population size must be >= 1");
  if (dim(dist) != env.genome_dim()) {
    throw ValidationError("distribution has dimension " + std::to_string(dim(dist)) + " but " +
                          std::string(env.name()) + " expects " + std::to_string(env.genome_dim()));
  }
  const std::uint64_t gen_seed = generation_seed(run_seed, static_cast<std::uint64_t>(generation));
  EvalBatch batch;
  batch.generation = generation;
  batch.offspring.resize(n);
  parallel_for(n, workers, [&](std::size_t i) {
    auto [stream, sign] = offspring_stream(gen_seed, i, options.mirrored);
    auto [component, genome] = regenerate(dist, stream, sign);
    const bool record = sampled_for_normalizer(stream, sign, options.state_sample_prob);
    RolloutResult r = env.evaluate(genome, normalizer, record);
    EvalRecord& rec = batch.offspring[i];
    rec.index = i;
    rec.component = component;
    rec.seed = stream;
    rec.sign = sign;
    rec.bc = std::move(r.bc);
    rec.fitness = r.fitness;
    rec.states = std::move(r.states);
  });
  return batch;
}

ParamVec regenerate_genome(const PopulationDistribution& dist, const EvalRecord& record) {
  return regenerate(dist, record.seed, record.sign).second;
}

}  // namespace evoes
