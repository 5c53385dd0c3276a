#include <doctest.h>

#include <evoes/error.hpp>
#include <evoes/rng.hpp>
#include <evoes/shaping.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>

using namespace evoes;

namespace {

// O(n^2) rank oracle: count of smaller values plus half of the other ties.
std::vector<double> brute_rank(const std::vector<double>& v) {
  const auto n = v.size();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    double below = 0.0, ties = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (v[j] < v[i]) below += 1.0;
      if (j != i && v[j] == v[i]) ties += 1.0;
    }
    out[i] = n == 1 ? 0.0 : (below + ties / 2.0) / static_cast<double>(n - 1) - 0.5;
  }
  return out;
}

std::vector<double> random_values(Rng& rng, std::size_t n, bool with_ties) {
  std::vector<double> v(n);
  for (auto& x : v) x = with_ties ? static_cast<double>(rng.below(5)) : rng.normal();
  return v;
}

}  // namespace

TEST_SUITE("shaping") {

TEST_CASE("rank normalize examples") {
  const std::vector<double> a{10, 30, 20};
  CHECK(rank_normalize(a) == std::vector<double>{-0.5, 0.5, 0.0});
  const std::vector<double> b{7};
  CHECK(rank_normalize(b) == std::vector<double>{0.0});
  const std::vector<double> c{5, 5};
  CHECK(rank_normalize(c) == std::vector<double>{0.0, 0.0});
}

TEST_CASE("rank normalize matches the brute-force oracle") {
  Rng rng(3);
  for (int t = 0; t < 40; ++t) {
    const auto v = random_values(rng, 1 + rng.below(60), t % 2 == 0);
    const auto got = rank_normalize(v);
    const auto want = brute_rank(v);
    for (std::size_t i = 0; i < v.size(); ++i) CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-14));
  }
}

TEST_CASE("rank normalize without ties: range and zero sum") {
  Rng rng(8);
  const auto v = random_values(rng, 101, false);
  const auto r = rank_normalize(v);
  CHECK(*std::min_element(r.begin(), r.end()) == -0.5);
  CHECK(*std::max_element(r.begin(), r.end()) == 0.5);
  double s = 0.0;
  for (double x : r) s += x;
  CHECK(std::abs(s) < 1e-12);
}

TEST_CASE("rank normalize is invariant under increasing maps") {
  Rng rng(9);
  for (int t = 0; t < 20; ++t) {
    const auto v = random_values(rng, 50, t % 2 == 1);
    std::vector<double> e(v.size()), aff(v.size());
    std::transform(v.begin(), v.end(), e.begin(), [](double x) { return std::exp(x); });
    std::transform(v.begin(), v.end(), aff.begin(), [](double x) { return 3.0 * x - 7.0; });
    CHECK(rank_normalize(e) == rank_normalize(v));
    CHECK(rank_normalize(aff) == rank_normalize(v));
  }
}

TEST_CASE("rank normalize rejects empty and non-finite input") {
  CHECK_THROWS_AS(rank_normalize(std::vector<double>{}), ValidationError);
  CHECK_THROWS_AS(rank_normalize(std::vector<double>{1.0, NAN}), ValidationError);
}

TEST_CASE("whiten examples") {
  BCMatrix b(3, 2);
  b << 1, 2, 2, 2, 3, 2;
  const auto [w, stats] = whiten(b);
  const double v = 1.0 / std::sqrt(2.0 / 3.0);
  CHECK(w(0, 0) == doctest::Approx(-v));
  CHECK(w(0, 0) == doctest::Approx(-1.22474).epsilon(1e-5));
  CHECK(w(1, 0) == doctest::Approx(0.0));
  CHECK(w(2, 0) == doctest::Approx(v));
  for (int i = 0; i < 3; ++i) CHECK(w(i, 1) == 0.0);
  CHECK(stats.std[1] == kWhitenStdFloor);
}

TEST_CASE("whitened columns have mean 0 and std 1, and invert") {
  Rng rng(10);
  BCMatrix b(200, 3);
  for (Eigen::Index i = 0; i < b.rows(); ++i) {
    b(i, 0) = 5.0 + 3.0 * rng.normal();
    b(i, 1) = std::exp(rng.normal());
    b(i, 2) = -100.0 + 2.0 * rng.uniform();
  }
  const auto [w, stats] = whiten(b);
  for (Eigen::Index c = 0; c < 3; ++c) {
    const double mean = w.col(c).mean();
    const double sd = std::sqrt((w.col(c).array() - mean).square().mean());
    CHECK(std::abs(mean) < 1e-12);
    CHECK(std::abs(sd - 1.0) < 1e-12);
  }
  CHECK((unwhiten(w, stats) - b).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((apply_whiten(b, stats) - w).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("whiten needs two rows") {
  CHECK_THROWS_AS(whiten(BCMatrix::Zero(1, 2)), ValidationError);
}

TEST_CASE("gaussian kernel values") {
  const std::vector<double> z1{0.0}, two{2.0}, z2{0.0, 0.0};
  CHECK(gaussian_kernel(z1, 1.0) == doctest::Approx(1.0 / std::sqrt(2.0 * std::numbers::pi)));
  CHECK(gaussian_kernel(z1, 1.0) == doctest::Approx(0.39894).epsilon(1e-5));
  CHECK(gaussian_kernel(two, 1.0) == doctest::Approx(0.05399).epsilon(1e-4));
  CHECK(gaussian_kernel(z2, 1.0) == doctest::Approx(0.15915).epsilon(1e-4));
  const std::vector<double> u{0.3, -0.4};
  CHECK(gaussian_kernel(u, 0.7) == doctest::Approx(gaussian_kernel_sq(0.25, 2, 0.7)).epsilon(1e-15));
  CHECK_THROWS_AS(gaussian_kernel(u, 0.0), ValidationError);
}

TEST_CASE("gaussian kernel peaks at zero and decreases with distance") {
  double prev = INFINITY;
  for (double r = 0.0; r < 6.0; r += 0.25) {
    const std::vector<double> u{r * 0.6, r * 0.8};
    const double k = gaussian_kernel(u, 1.3);
    CHECK(k < prev);
    prev = k;
  }
}

}
