#pragma once

#include <cstdint>
#include <limits>

namespace evoes {

/// SplitMix64 finalizer. Bijective on 64-bit words.
constexpr std::uint64_t fmix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Combines two words into a stream seed:
///   mix(a, b) = fmix64(a ^ fmix64(b + 0x9e3779b97f4a7c15))
/// This is the only hash used to derive per-generation and per-offspring
/// streams, so any offspring can be regenerated from (run_seed, generation,
/// index) alone.
constexpr std::uint64_t mix(std::uint64_t a, std::uint64_t b) noexcept {
  return fmix64(a ^ fmix64(b + 0x9e3779b97f4a7c15ULL));
}

constexpr std::uint64_t generation_seed(std::uint64_t run_seed, std::uint64_t generation) noexcept {
  return mix(run_seed, generation);
}

constexpr std::uint64_t offspring_seed(std::uint64_t run_seed, std::uint64_t generation,
                                       std::uint64_t index) noexcept {
  return mix(generation_seed(run_seed, generation), index);
}

/// SplitMix64 stream. Satisfies UniformRandomBitGenerator, and additionally
/// produces uniforms and standard normals with a fixed, documented algorithm
/// (53-bit uniforms, Box-Muller pairs) so draws are identical across
/// standard libraries.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed) noexcept : state_(seed) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept {
    state_ += 0x9e3779b97f4a7c15ULL;
    return fmix64(state_);
  }

  /// Uniform on [0, 1).
  double uniform() noexcept;
  /// Uniform on [lo, hi).
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
  /// Uniform integer on [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n) noexcept;
  /// Standard normal.
  double normal() noexcept;

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace evoes
