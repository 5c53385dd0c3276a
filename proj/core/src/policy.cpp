#include "evoes/policy.hpp"

#include "evoes/error.hpp"
#include "evoes/rng.hpp"

#include <cmath>
#include <string>

namespace evoes {

namespace {

std::vector<int> layer_widths(const MlpSpec& spec) {
  std::vector<int> w{spec.input_dim};
  w.insert(w.end(), spec.hidden.begin(), spec.hidden.end());
  w.push_back(spec.output_dim);
  return w;
}

void activate(Eigen::VectorXd& v, Activation a) {
  switch (a) {
    case Activation::tanh: v = v.array().tanh(); break;
    case Activation::relu: v = v.cwiseMax(0.0); break;
    case Activation::linear: break;
  }
}

}  // namespace

Activation activation_from_string(std::string_view name) {
  if (name == "tanh") return Activation::tanh;
  if (name == "relu") return Activation::relu;
  if (name == "linear") return Activation::linear;
  throw ValidationError("unknown activation '" + std::string(name) + "'");
}

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::tanh: return "tanh";
    case Activation::relu: return "relu";
    case Activation::linear: return "linear";
  }
  return "?";
}

void validate(const MlpSpec& spec) {
  if (spec.input_dim < 1 || spec.output_dim < 1) throw ValidationError("mlp input/output dims must be >= 1");
  for (int h : spec.hidden) {
    if (h < 1) throw ValidationError("mlp hidden widths must be >= 1");
  }
}

std::size_t param_count(const MlpSpec& spec) {
  const auto w = layer_widths(spec);
  std::size_t total = 0;
  for (std::size_t l = 0; l + 1 < w.size(); ++l) {
    total += static_cast<std::size_t>(w[l + 1]) * static_cast<std::size_t>(w[l] + 1);
  }
  return total;
}

ParamVec init_mlp(const MlpSpec& spec, std::uint64_t seed, double output_scale) {
  validate(spec);
  const auto w = layer_widths(spec);
  ParamVec out = ParamVec::Zero(static_cast<Eigen::Index>(param_count(spec)));
  Rng rng(seed);
  Eigen::Index pos = 0;
  for (std::size_t l = 0; l + 1 < w.size(); ++l) {
    double scale = 1.0 / std::sqrt(static_cast<double>(w[l]));
    if (l + 2 == w.size()) scale *= output_scale;
    const Eigen::Index nw = static_cast<Eigen::Index>(w[l]) * w[l + 1];
    for (Eigen::Index k = 0; k < nw; ++k) out[pos++] = scale * rng.normal();
    pos += w[l + 1];  // biases stay zero
  }
  return out;
}

ObsNormalizer ObsNormalizer::identity(int dim) {
  return ObsNormalizer{0, Eigen::VectorXd::Zero(dim), Eigen::VectorXd::Zero(dim)};
}

Eigen::VectorXd ObsNormalizer::std() const {
  if (count == 0) return Eigen::VectorXd::Ones(mean.size());
  return (m2 / static_cast<double>(count)).cwiseSqrt().cwiseMax(kStdFloor);
}

Eigen::VectorXd ObsNormalizer::apply(const Eigen::VectorXd& obs) const {
  if (count == 0) return obs;
  if (obs.size() != mean.size()) throw ValidationError("observation size does not match normalizer");
  return (obs - mean).cwiseQuotient(std());
}

ObsNormalizer merge_normalizers(const ObsNormalizer& a, const ObsNormalizer& b) {
  if (b.count == 0) return a;
  if (a.count == 0) return b;
  if (a.mean.size() != b.mean.size()) throw ValidationError("normalizer dimensions differ");
  const double na = static_cast<double>(a.count);
  const double nb = static_cast<double>(b.count);
  const double n = na + nb;
  const Eigen::VectorXd delta = b.mean - a.mean;
  ObsNormalizer out;
  out.count = a.count + b.count;
  out.mean = a.mean + delta * (nb / n);
  out.m2 = a.m2 + b.m2 + delta.cwiseProduct(delta) * (na * nb / n);
  return out;
}

ObsNormalizer update_normalizer(const ObsNormalizer& normalizer, std::span<const Eigen::VectorXd> states) {
  if (states.empty()) return normalizer;
  const auto d = states.front().size();
  ObsNormalizer batch = ObsNormalizer::identity(static_cast<int>(d));
  for (const auto& s : states) {
    if (s.size() != d) throw ValidationError("states differ in dimension");
    batch.mean += s;
  }
  batch.count = static_cast<std::int64_t>(states.size());
  batch.mean /= static_cast<double>(states.size());
  for (const auto& s : states) batch.m2 += (s - batch.mean).cwiseAbs2();
  if (normalizer.count == 0) return batch;
  return merge_normalizers(normalizer, batch);
}

Mlp::Mlp(const MlpSpec& spec, const ParamVec& params) : spec_(spec) {
  validate(spec);
  if (static_cast<std::size_t>(params.size()) != param_count(spec)) {
    throw ValidationError("mlp expects " + std::to_string(param_count(spec)) + " params, got " +
                          std::to_string(params.size()));
  }
  const auto w = layer_widths(spec);
  Eigen::Index pos = 0;
  for (std::size_t l = 0; l + 1 < w.size(); ++l) {
    const int in = w[l];
    const int out = w[l + 1];
    Eigen::MatrixXd m(out, in);
    for (int r = 0; r < out; ++r) {
      for (int c = 0; c < in; ++c) m(r, c) = params[pos++];
    }
    weights_.push_back(std::move(m));
    biases_.push_back(params.segment(pos, out));
    pos += out;
  }
}

Eigen::VectorXd Mlp::forward(const Eigen::VectorXd& x) const {
  if (x.size() != spec_.input_dim) {
    throw ValidationError("mlp input has size " + std::to_string(x.size()) + ", expected " +
                          std::to_string(spec_.input_dim));
  }
  Eigen::VectorXd h = x;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    h = weights_[l] * h + biases_[l];
    activate(h, l + 1 == weights_.size() ? spec_.output_activation : spec_.activation);
  }
  return h;
}

Eigen::VectorXd mlp_forward(const MlpSpec& spec, const ParamVec& params, const Eigen::VectorXd& obs,
                            const ObsNormalizer& normalizer) {
  return Mlp(spec, params).forward(normalizer.apply(obs));
}

}  // namespace evoes
