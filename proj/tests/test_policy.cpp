#include <doctest.h>

#include <evoes/error.hpp>
#include <evoes/policy.hpp>
#include <evoes/rng.hpp>

#include <cmath>

using namespace evoes;

namespace {

// Forward pass written directly against the documented flat layout.
Eigen::VectorXd layout_forward(const MlpSpec& spec, const ParamVec& p, Eigen::VectorXd x) {
  std::vector<int> widths{spec.input_dim};
  widths.insert(widths.end(), spec.hidden.begin(), spec.hidden.end());
  widths.push_back(spec.output_dim);
  Eigen::Index off = 0;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const int in = widths[l], out = widths[l + 1];
    Eigen::VectorXd y(out);
    for (int r = 0; r < out; ++r) {
      double acc = 0.0;
      for (int c = 0; c < in; ++c) acc += p[off + r * in + c] * x[c];
      y[r] = acc + p[off + out * in + r];
    }
    off += out * in + out;
    const Activation a = l + 2 == widths.size() ? spec.output_activation : spec.activation;
    for (int r = 0; r < out; ++r) {
      if (a == Activation::tanh) y[r] = std::tanh(y[r]);
      if (a == Activation::relu) y[r] = std::max(0.0, y[r]);
    }
    x = y;
  }
  return x;
}

std::vector<Eigen::VectorXd> random_states(Rng& rng, int n, int dim) {
  std::vector<Eigen::VectorXd> s;
  for (int i = 0; i < n; ++i) s.push_back(Eigen::VectorXd::NullaryExpr(dim, [&] { return 3.0 + 2.0 * rng.normal(); }));
  return s;
}

}  // namespace

TEST_SUITE("policy") {

TEST_CASE("parameter count") {
  CHECK(param_count(MlpSpec{1, 1, {2}, Activation::tanh, Activation::linear}) == 7);
  CHECK(param_count(MlpSpec{3, 1, {16, 16}, Activation::tanh, Activation::tanh}) == 3 * 16 + 16 + 16 * 16 + 16 + 16 + 1);
  CHECK(param_count(MlpSpec{26, 6, {256, 256}, Activation::tanh, Activation::tanh}) == 74246);
}

TEST_CASE("init is deterministic with zero biases") {
  const MlpSpec spec{4, 2, {8, 5}, Activation::tanh, Activation::tanh};
  const ParamVec a = init_mlp(spec, 42);
  CHECK(a == init_mlp(spec, 42));
  CHECK(a != init_mlp(spec, 43));
  CHECK(static_cast<std::size_t>(a.size()) == param_count(spec));
  // Bias blocks follow each weight block.
  CHECK(a.segment(4 * 8, 8).norm() == 0.0);
  CHECK(a.segment(4 * 8 + 8 + 8 * 5, 5).norm() == 0.0);
  CHECK(a.tail(2).norm() == 0.0);
  const ParamVec unscaled = init_mlp(spec, 42, 1.0);
  const Eigen::Index out_w = 4 * 8 + 8 + 8 * 5 + 5;
  CHECK((a.segment(out_w, 10) - 0.01 * unscaled.segment(out_w, 10)).norm() < 1e-15);
  CHECK(a.head(out_w) == unscaled.head(out_w));
}

TEST_CASE("init scale follows fan-in") {
  const MlpSpec spec{400, 1, {300}, Activation::tanh, Activation::linear};
  const ParamVec p = init_mlp(spec, 1, 1.0);
  const double var = p.head(400 * 300).squaredNorm() / (400.0 * 300.0);
  CHECK(var == doctest::Approx(1.0 / 400.0).epsilon(0.02));
}

TEST_CASE("forward examples") {
  const MlpSpec lin{2, 3, {4}, Activation::tanh, Activation::linear};
  const auto zero = mlp_forward(lin, ParamVec::Zero(static_cast<Eigen::Index>(param_count(lin))),
                                Eigen::Vector2d(5.0, -1.0), ObsNormalizer::identity(2));
  CHECK(zero.norm() == 0.0);
  const MlpSpec id{1, 1, {}, Activation::tanh, Activation::linear};
  CHECK(mlp_forward(id, ParamVec{{1.0, 0.0}}, Eigen::VectorXd::Constant(1, 3.0), ObsNormalizer::identity(1))[0] == 3.0);
  const MlpSpec sq{2, 3, {5}, Activation::relu, Activation::tanh};
  Rng rng(2);
  for (int t = 0; t < 20; ++t) {
    const ParamVec p = 10.0 * init_mlp(sq, static_cast<std::uint64_t>(t), 1.0) + ParamVec::Ones(static_cast<Eigen::Index>(param_count(sq)));
    const auto y = mlp_forward(sq, p, Eigen::Vector2d(rng.normal(), rng.normal()), ObsNormalizer::identity(2));
    CHECK(y.cwiseAbs().maxCoeff() <= 1.0);
  }
}

TEST_CASE("unpacked network matches the flat layout") {
  Rng rng(3);
  for (auto act : {Activation::tanh, Activation::relu, Activation::linear}) {
    const MlpSpec spec{3, 2, {4, 6}, act, Activation::linear};
    const ParamVec p = ParamVec::NullaryExpr(static_cast<Eigen::Index>(param_count(spec)), [&] { return rng.normal(); });
    const Mlp net(spec, p);
    for (int t = 0; t < 5; ++t) {
      const Eigen::VectorXd x = Eigen::VectorXd::NullaryExpr(3, [&] { return rng.normal(); });
      CHECK((net.forward(x) - layout_forward(spec, p, x)).norm() < 1e-12);
    }
  }
}

TEST_CASE("forward is Lipschitz in the parameters on bounded inputs") {
  const MlpSpec spec{3, 1, {16, 16}, Activation::tanh, Activation::tanh};
  Rng rng(4);
  const ParamVec p = init_mlp(spec, 4, 1.0);
  const auto norm = ObsNormalizer::identity(3);
  // With |x| <= 1 and weights of order 1 the bound C = 50 holds comfortably.
  const double c = 50.0;
  for (int t = 0; t < 50; ++t) {
    const Eigen::VectorXd x = Eigen::VectorXd::NullaryExpr(3, [&] { return rng.uniform(-1.0, 1.0); });
    const ParamVec dp = ParamVec::NullaryExpr(p.size(), [&] { return rng.normal(); }).normalized() * 1e-4;
    const double dy = (mlp_forward(spec, p + dp, x, norm) - mlp_forward(spec, p, x, norm)).norm();
    CHECK(dy <= c * 1e-4);
  }
}

TEST_CASE("normalizer examples") {
  const auto fresh = ObsNormalizer::identity(1);
  CHECK(update_normalizer(fresh, {}) == fresh);
  const std::vector<Eigen::VectorXd> s{Eigen::VectorXd::Constant(1, 1.0), Eigen::VectorXd::Constant(1, 3.0)};
  const auto n = update_normalizer(fresh, s);
  CHECK(n.count == 2);
  CHECK(n.mean[0] == doctest::Approx(2.0));
  CHECK(n.std()[0] == doctest::Approx(1.0));
  CHECK(n.apply(Eigen::VectorXd::Constant(1, 4.0))[0] == doctest::Approx(2.0));
  CHECK(fresh.apply(Eigen::VectorXd::Constant(1, 4.0))[0] == 4.0);
}

TEST_CASE("normalizer merge is order-insensitive and matches a direct computation") {
  Rng rng(5);
  const auto a = random_states(rng, 137, 3);
  const auto b = random_states(rng, 59, 3);
  const auto fresh = ObsNormalizer::identity(3);
  const auto ab = update_normalizer(update_normalizer(fresh, a), b);
  const auto ba = update_normalizer(update_normalizer(fresh, b), a);
  CHECK((ab.mean - ba.mean).cwiseAbs().maxCoeff() < 1e-9);
  CHECK((ab.m2 - ba.m2).cwiseAbs().maxCoeff() < 1e-9);
  const auto merged = merge_normalizers(update_normalizer(fresh, a), update_normalizer(fresh, b));
  CHECK((merged.m2 - ab.m2).cwiseAbs().maxCoeff() < 1e-9);

  std::vector<Eigen::VectorXd> all = a;
  all.insert(all.end(), b.begin(), b.end());
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(3), sq = Eigen::VectorXd::Zero(3);
  for (const auto& x : all) mean += x;
  mean /= static_cast<double>(all.size());
  for (const auto& x : all) sq += (x - mean).cwiseAbs2();
  CHECK(ab.count == static_cast<std::int64_t>(all.size()));
  CHECK((ab.mean - mean).cwiseAbs().maxCoeff() < 1e-9);
  CHECK((ab.m2 - sq).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("normalizer std floor") {
  const std::vector<Eigen::VectorXd> s(5, Eigen::VectorXd::Constant(2, 7.0));
  const auto n = update_normalizer(ObsNormalizer::identity(2), s);
  CHECK(n.std()[0] == ObsNormalizer::kStdFloor);
}

TEST_CASE("errors") {
  CHECK_THROWS_AS(validate(MlpSpec{0, 1, {}, Activation::tanh, Activation::tanh}), ValidationError);
  CHECK_THROWS_AS(validate(MlpSpec{1, 1, {3, 0}, Activation::tanh, Activation::tanh}), ValidationError);
  const MlpSpec spec{2, 1, {3}, Activation::tanh, Activation::tanh};
  CHECK_THROWS_AS(Mlp(spec, ParamVec::Zero(3)), ValidationError);
  const ParamVec p = ParamVec::Zero(static_cast<Eigen::Index>(param_count(spec)));
  CHECK_THROWS_AS(mlp_forward(spec, p, Eigen::VectorXd::Zero(3), ObsNormalizer::identity(2)), ValidationError);
  CHECK_THROWS_AS(activation_from_string("gelu"), ValidationError);
}

}
