#pragma once

#include "evoes/distributions.hpp"

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace evoes {

enum class Activation { tanh, relu, linear };

Activation activation_from_string(std::string_view name);
std::string_view to_string(Activation a);

struct MlpSpec {
  int input_dim = 1;
  int output_dim = 1;
  std::vector<int> hidden;
  Activation activation = Activation::tanh;
  Activation output_activation = Activation::tanh;

  friend bool operator==(const MlpSpec&, const MlpSpec&) = default;
};

void validate(const MlpSpec& spec);

/// Layer l stores its (out x in) weight matrix row-major, followed by its
/// out biases; layers are concatenated input to output.
std::size_t param_count(const MlpSpec& spec);

/// Weights ~ N(0, 1/fan_in), biases 0. Output-layer weights are further
/// multiplied by `output_scale`.
ParamVec init_mlp(const MlpSpec& spec, std::uint64_t seed, double output_scale = 0.01);

struct ObsNormalizer {
  std::int64_t count = 0;
  Eigen::VectorXd mean;
  Eigen::VectorXd m2;

  static constexpr double kStdFloor = 1e-6;

  static ObsNormalizer identity(int dim);
  Eigen::VectorXd std() const;
  /// Identity while count == 0.
  Eigen::VectorXd apply(const Eigen::VectorXd& obs) const;

  friend bool operator==(const ObsNormalizer&, const ObsNormalizer&) = default;
};

/// Chan et al. pairwise merge of the states into the running moments.
ObsNormalizer update_normalizer(const ObsNormalizer& normalizer, std::span<const Eigen::VectorXd> states);
/// Merges two sets of running moments.
ObsNormalizer merge_normalizers(const ObsNormalizer& a, const ObsNormalizer& b);

/// Unpacked network for repeated evaluation.
class Mlp {
 public:
  Mlp(const MlpSpec& spec, const ParamVec& params);

  /// Raw (already normalized) input to output.
  Eigen::VectorXd forward(const Eigen::VectorXd& x) const;
  const MlpSpec& spec() const { return spec_; }

 private:
  MlpSpec spec_;
  std::vector<Eigen::MatrixXd> weights_;
  std::vector<Eigen::VectorXd> biases_;
};

Eigen::VectorXd mlp_forward(const MlpSpec& spec, const ParamVec& params, const Eigen::VectorXd& obs,
                            const ObsNormalizer& normalizer);

}  // namespace evoes
