#include <doctest.h>

#include <evoes/error.hpp>
#include <evoes/estimators.hpp>
#include <evoes/gradcheck.hpp>
#include <evoes/rng.hpp>

#include <cmath>
#include <numbers>

using namespace evoes;

namespace {

struct Batch {
  std::vector<ParamVec> genomes;
  ScoreBatch scores;
};

Batch draw(const IsoGaussian& d, std::size_t n, std::uint64_t seed, bool mirrored = false) {
  Batch b;
  for (auto& o : sample_offspring(d, n, seed, mirrored)) b.genomes.push_back(o.genome);
  b.scores = score_batch(d, b.genomes);
  return b;
}

BCMatrix identity_bcs(const std::vector<ParamVec>& g) {
  BCMatrix b(static_cast<Eigen::Index>(g.size()), g.front().size());
  for (std::size_t i = 0; i < g.size(); ++i) b.row(static_cast<Eigen::Index>(i)) = g[i].transpose();
  return b;
}

// Dense O(n^2) KDE and the closed-form MaxEnt gradient, written out directly.
Eigen::VectorXd dense_density(const BCMatrix& b, double h) {
  const auto n = b.rows();
  const double norm = std::pow(2.0 * std::numbers::pi * h * h, -0.5 * static_cast<double>(b.cols()));
  Eigen::VectorXd p(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double acc = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) acc += norm * std::exp(-(b.row(j) - b.row(i)).squaredNorm() / (2 * h * h));
    p[i] = acc / static_cast<double>(n);
  }
  return p;
}

ParamVec dense_maxent_grad(const BCMatrix& b, const Eigen::MatrixXd& s, double h) {
  const auto n = b.rows();
  const double dn = static_cast<double>(n);
  const double norm = std::pow(2.0 * std::numbers::pi * h * h, -0.5 * static_cast<double>(b.cols()));
  const Eigen::VectorXd p = dense_density(b, h);
  ParamVec g = ParamVec::Zero(s.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    ParamVec inner = ParamVec::Zero(s.cols());
    for (Eigen::Index j = 0; j < n; ++j) {
      inner += norm * std::exp(-(b.row(j) - b.row(i)).squaredNorm() / (2 * h * h)) * s.row(j).transpose();
    }
    g += std::log(p[i]) * s.row(i).transpose() + inner / (p[i] * dn);
  }
  return -g / dn;
}

}  // namespace

TEST_SUITE("estimators") {

TEST_CASE("names round-trip") {
  for (auto e : {Estimator::es, Estimator::maxvar, Estimator::maxent}) CHECK(estimator_from_string(to_string(e)) == e);
  CHECK(estimator_from_string("maxent_ees") == Estimator::maxent);
  CHECK(estimator_from_string("standard_es") == Estimator::es);
  CHECK_THROWS_AS(estimator_from_string("cma"), ValidationError);
}

TEST_CASE("es gradient on a two-point batch") {
  const IsoGaussian d{ParamVec::Zero(1), 0.5};
  const std::vector<ParamVec> g{ParamVec::Constant(1, 0.5), ParamVec::Constant(1, -0.5)};
  const auto s = score_batch(d, g);
  const std::vector<double> f{0.5, -0.5};
  const auto e = es_gradient(f, s);
  CHECK(e.grad[0][0] == doctest::Approx(1.0));
  CHECK(e.loss == 0.0);
  CHECK(e.n_samples == 2);
}

TEST_CASE("constant shaped fitness gives no signal") {
  const IsoGaussian d{ParamVec::Constant(2, 0.3), 0.5};
  const auto b = draw(d, 10000, 4);
  const std::vector<double> f(10000, 0.25);
  const auto e = es_gradient(f, b.scores);
  // Each coordinate of 0.25 * s has sd 0.25 / sigma.
  const double se = 0.25 / 0.5 / std::sqrt(1e4);
  for (Eigen::Index j = 0; j < 2; ++j) CHECK(std::abs(e.grad[0][j]) < 3 * se);
}

TEST_CASE("es gradient matches the shaped-objective finite difference") {
  const IsoGaussian d{ParamVec::Constant(1, 0.2), 0.5};
  const auto task = make_synthetic_task("linear", 1);
  const GradcheckOptions o{true, true, 1.0, false};
  const auto sf = score_function_gradient(Estimator::es, d, task, 100000, 5, o);
  const auto fd = finite_difference_check(Estimator::es, d, task, 100000, d.sigma / 100, 5, o);
  CHECK(sf.grad[0][0] > 0.0);
  CHECK(sf.grad[0][0] == doctest::Approx(fd[0]).epsilon(0.05));
}

TEST_CASE("es gradient is invariant under increasing fitness transforms") {
  const IsoGaussian d{ParamVec::Constant(3, 0.0), 1.0};
  const auto b = draw(d, 300, 6);
  std::vector<double> f, g;
  for (const auto& z : b.genomes) {
    f.push_back(z.sum());
    g.push_back(std::exp(2.0 * z.sum()) + 1.0);
  }
  CHECK(es_gradient(rank_normalize(f), b.scores).grad[0] == es_gradient(rank_normalize(g), b.scores).grad[0]);
}

TEST_CASE("maxvar: linear behaviors on a symmetric pair") {
  const IsoGaussian d{ParamVec::Zero(1), 0.5};
  const std::vector<ParamVec> g{ParamVec::Constant(1, 0.5), ParamVec::Constant(1, -0.5)};
  const auto e = maxvar_gradient(identity_bcs(g), score_batch(d, g));
  CHECK(e.grad[0][0] == doctest::Approx(0.0));
  CHECK(e.loss == doctest::Approx(0.25));
}

TEST_CASE("maxvar: constant column") {
  const IsoGaussian d{ParamVec::Zero(2), 0.5};
  const auto b = draw(d, 50, 1);
  const auto e = maxvar_gradient(BCMatrix::Constant(50, 2, 3.0), b.scores);
  CHECK(e.loss == 0.0);
  CHECK(e.grad[0].norm() == 0.0);
}

TEST_CASE("maxvar is invariant under a constant shift of behaviors") {
  const IsoGaussian d{ParamVec::Zero(2), 0.5};
  const auto b = draw(d, 400, 2);
  BCMatrix bc = identity_bcs(b.genomes);
  bc.col(0) = bc.col(0).array().square();
  BCMatrix shifted = bc.rowwise() + Eigen::RowVector2d(10.0, -3.0);
  for (bool w : {true, false}) {
    const auto a = maxvar_gradient(bc, b.scores, w);
    const auto s = maxvar_gradient(shifted, b.scores, w);
    CHECK((a.grad[0] - s.grad[0]).norm() < 1e-9 * (1.0 + a.grad[0].norm()));
    CHECK(a.loss == doctest::Approx(s.loss).epsilon(1e-9));
  }
}

TEST_CASE("maxvar on the interference task pushes toward the envelope peak") {
  const IsoGaussian d{ParamVec::Constant(1, 1.0), 0.5};
  const auto task = make_synthetic_task("interference", 1);
  const GradcheckOptions o{true, true, 1.0, false};
  const auto sf = score_function_gradient(Estimator::maxvar, d, task, 100000, 8, o);
  const auto fd = finite_difference_check(Estimator::maxvar, d, task, 100000, d.sigma / 100, 8, o);
  CHECK(sf.grad[0][0] > 0.0);
  CHECK(sf.grad[0][0] == doctest::Approx(fd[0]).epsilon(0.05));
}

TEST_CASE("maxent: two equal behaviors") {
  const IsoGaussian d{ParamVec::Zero(1), 1.0};
  const std::vector<ParamVec> g{ParamVec::Constant(1, 0.5), ParamVec::Constant(1, -0.5)};
  const auto e = maxent_gradient(BCMatrix::Constant(2, 1, 4.0), score_batch(d, g), 1.0);
  const Eigen::VectorXd p = kde_density(BCMatrix::Constant(2, 1, 4.0), 1.0);
  CHECK(p[0] == doctest::Approx(0.39894).epsilon(1e-5));
  CHECK(p[1] == doctest::Approx(0.39894).epsilon(1e-5));
  CHECK(e.loss == doctest::Approx(0.91894).epsilon(1e-5));
}

TEST_CASE("maxent: mirrored batch with linear behaviors has zero gradient") {
  const IsoGaussian d{ParamVec::Constant(1, 2.0), 0.5};
  const auto b = draw(d, 1000, 3, true);
  const auto e = maxent_gradient(identity_bcs(b.genomes), b.scores, 1.0);
  CHECK(std::abs(e.grad[0][0]) < 1e-9);
}

TEST_CASE("maxent loss matches the analytic cross entropy") {
  const double sigma = 0.5, h = 1.0;
  const IsoGaussian d{ParamVec::Constant(1, 0.7), sigma};
  const auto b = draw(d, 10000, 12);
  const auto e = maxent_gradient(identity_bcs(b.genomes), b.scores, h);
  const double v = sigma * sigma + h * h;
  const double oracle = 0.5 * std::log(2.0 * std::numbers::pi * v) + sigma * sigma / (2.0 * v);
  CHECK(oracle == doctest::Approx(1.1305).epsilon(1e-4));
  CHECK(std::abs(e.loss - oracle) < 0.02);
}

TEST_CASE("sparse KDE and gradient agree with the dense formulas") {
  Rng rng(13);
  for (int dims : {1, 2, 3}) {
    const IsoGaussian d{ParamVec::Zero(2), 0.7};
    const auto b = draw(d, 300, 20 + dims);
    BCMatrix bc(300, dims);
    for (Eigen::Index i = 0; i < 300; ++i) {
      for (int c = 0; c < dims; ++c) bc(i, c) = (c == 0 ? 8.0 : 1.0) * rng.normal() + b.genomes[i][0];
    }
    for (double h : {0.3, 1.0}) {
      const Eigen::VectorXd p = kde_density(bc, h);
      const Eigen::VectorXd q = dense_density(bc, h);
      CHECK((p - q).cwiseQuotient(q).cwiseAbs().maxCoeff() < 1e-12);
      const auto e = maxent_gradient(bc, b.scores, h);
      const ParamVec want = dense_maxent_grad(bc, b.scores.per_component[0], h);
      CHECK((e.grad[0] - want).norm() < 1e-10 * (1.0 + want.norm()));
      CHECK(e.loss == doctest::Approx(-q.array().log().mean()).epsilon(1e-12));
    }
  }
}

TEST_CASE("spreading behaviors lowers mean log density") {
  Rng rng(14);
  BCMatrix bc(500, 2);
  for (Eigen::Index i = 0; i < bc.size(); ++i) bc.data()[i] = rng.normal();
  const BCMatrix w = whiten(bc).first;
  const double tight = kde_entropy(w, 1.0);
  const double spread = kde_entropy(2.0 * w, 1.0);
  // kde_entropy is -mean log p; a larger value means lower mean log density.
  CHECK(spread > tight);
}

TEST_CASE("estimates are bit-reproducible") {
  const IsoGaussian d{ParamVec::Constant(2, 0.1), 0.5};
  const auto b = draw(d, 2000, 15);
  const BCMatrix bc = identity_bcs(b.genomes);
  CHECK(maxent_gradient(bc, b.scores, 1.0).grad[0] == maxent_gradient(bc, b.scores, 1.0).grad[0]);
  CHECK(maxvar_gradient(bc, b.scores).grad[0] == maxvar_gradient(bc, b.scores).grad[0]);
}

TEST_CASE("mixture gradients are responsibility weighted") {
  const GaussianMixture gm{{ParamVec::Constant(1, -3.0), ParamVec::Constant(1, 3.0)}, 0.5};
  const PopulationDistribution pd = gm;
  std::vector<ParamVec> g;
  for (auto& o : sample_offspring(pd, 400, 16)) g.push_back(o.genome);
  const auto s = score_batch(pd, g);
  std::vector<double> f;
  for (const auto& z : g) f.push_back(z[0]);
  const auto e = es_gradient(f, s);
  REQUIRE(e.grad.size() == 2);
  ParamVec want0 = ParamVec::Zero(1), want1 = ParamVec::Zero(1);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const auto r = responsibilities(pd, g[i]);
    want0 += f[i] * r[0] * (g[i] - gm.means[0]) / 0.25;
    want1 += f[i] * r[1] * (g[i] - gm.means[1]) / 0.25;
  }
  CHECK((e.grad[0] - want0 / 400.0).norm() < 1e-12);
  CHECK((e.grad[1] - want1 / 400.0).norm() < 1e-12);
}

TEST_CASE("shape errors") {
  const IsoGaussian d{ParamVec::Zero(1), 0.5};
  const auto b = draw(d, 10, 1);
  const std::vector<double> f(9, 0.0);
  CHECK_THROWS_AS(es_gradient(f, b.scores), ValidationError);
  CHECK_THROWS_AS(maxvar_gradient(BCMatrix::Zero(9, 1), b.scores), ValidationError);
  CHECK_THROWS_AS(maxent_gradient(BCMatrix::Zero(10, 1), b.scores, 0.0), ValidationError);
  CHECK_THROWS_AS(maxent_gradient(BCMatrix::Constant(10, 1, NAN), b.scores, 1.0), NumericalError);
}

}

TEST_SUITE("gradcheck") {

TEST_CASE("maxvar finite difference on linear behaviors is near zero") {
  const IsoGaussian d{ParamVec::Constant(2, 0.4), 0.5};
  const auto task = make_synthetic_task("linear", 2);
  const auto fd = finite_difference_check(Estimator::maxvar, d, task, 10000, 0.005, 3, {true, true, 1.0, false});
  // Under common random numbers this is 2 (mean(z) - m0) / v0 = 0 up to rounding.
  CHECK(fd.norm() < 1e-6);
}

TEST_CASE("finite difference of a quadratic fitness") {
  const IsoGaussian d{ParamVec::Constant(1, 1.0), 0.5};
  const auto fd = finite_difference_check(Estimator::es, d, make_synthetic_task("quadratic", 1), 100000, 0.005, 4,
                                          {false, true, 1.0, false});
  CHECK(std::abs(fd[0] - 2.0) < 0.05);
}

TEST_CASE("maxent on interference: score function and finite difference agree in sign") {
  const auto task = make_synthetic_task("interference", 1);
  const GradcheckOptions o{true, true, 1.0, true};
  for (double mu : {1.0, 4.0, 10.0}) {
    const IsoGaussian d{ParamVec::Constant(1, mu), 0.5};
    const auto sf = score_function_gradient(Estimator::maxent, d, task, 5000, 17, o);
    const auto fd = finite_difference_check(Estimator::maxent, d, task, 5000, d.sigma / 100, 17, o);
    CAPTURE(mu);
    CHECK(sf.grad[0][0] * fd[0] > 0.0);
  }
}

TEST_CASE("cosine similarity") {
  CHECK(cosine_similarity(ParamVec{{1.0, 0.0}}, ParamVec{{2.0, 0.0}}) == doctest::Approx(1.0));
  CHECK(cosine_similarity(ParamVec{{1.0, 0.0}}, ParamVec{{0.0, 2.0}}) == doctest::Approx(0.0));
  CHECK(cosine_similarity(ParamVec{{0.0, 0.0}}, ParamVec{{0.0, 2.0}}) == 0.0);
}

TEST_CASE("synthetic task validation") {
  CHECK_THROWS_AS(make_synthetic_task("interference", 2), ValidationError);
  CHECK_THROWS_AS(make_synthetic_task("nope", 1), ValidationError);
  CHECK_THROWS_AS(make_synthetic_task("linear", 0), ValidationError);
}

}
