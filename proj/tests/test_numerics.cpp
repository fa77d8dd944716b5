#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cmath>
#include <random>

#include "cvforge/numerics.hpp"
#include "doctest.h"
#include "helpers.hpp"

using namespace cvforge::numerics;

namespace {

Matrix random_matrix(std::mt19937_64& gen, std::size_t r, std::size_t c) {
  std::normal_distribution<double> z(0.0, 1.0);
  Matrix m(r, c);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) m(i, j) = z(gen);
  return m;
}

// Normal-equations oracle: solve (X'X + eps I) b = X'y with Gaussian
// elimination. Only valid for well-conditioned full-rank designs.
std::vector<double> normal_equations(const Matrix& x, const std::vector<double>& y) {
  std::size_t p = x.cols();
  std::vector<std::vector<double>> a(p, std::vector<double>(p + 1, 0.0));
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = 0; j < p; ++j)
      for (std::size_t k = 0; k < x.rows(); ++k) a[i][j] += x(k, i) * x(k, j);
    for (std::size_t k = 0; k < x.rows(); ++k) a[i][p] += x(k, i) * y[k];
  }
  for (std::size_t c = 0; c < p; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < p; ++r)
      if (std::fabs(a[r][c]) > std::fabs(a[piv][c])) piv = r;
    std::swap(a[c], a[piv]);
    for (std::size_t r = 0; r < p; ++r) {
      if (r == c) continue;
      double f = a[r][c] / a[c][c];
      for (std::size_t j = c; j <= p; ++j) a[r][j] -= f * a[c][j];
    }
  }
  std::vector<double> b(p);
  for (std::size_t i = 0; i < p; ++i) b[i] = a[i][p] / a[i][i];
  return b;
}

}  // namespace

TEST_CASE("least_squares exact fit without intercept") {
  Matrix x(3, 1);
  x(0, 0) = 1;
  x(1, 0) = 2;
  x(2, 0) = 3;
  auto b = least_squares(x, {2, 4, 6}, false);
  REQUIRE(b.size() == 1);
  CHECK(b[0] == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("least_squares zero column gives zero coefficient") {
  Matrix x(3, 1);
  x(0, 0) = 0;
  x(1, 0) = 0;
  x(2, 0) = 0;
  auto b = least_squares(x, {1, 2, 3}, false);
  CHECK(b[0] == 0.0);
}

TEST_CASE("least_squares matches normal-equations oracle on random systems") {
  std::mt19937_64 gen(11);
  for (int rep = 0; rep < 20; ++rep) {
    Matrix x = random_matrix(gen, 20, 3);
    std::vector<double> y(20);
    std::normal_distribution<double> z(0.0, 1.0);
    for (auto& v : y) v = z(gen);
    auto b = least_squares(x, y, false);
    auto oracle = normal_equations(x, y);
    for (std::size_t j = 0; j < 3; ++j)
      CHECK(b[j] == doctest::Approx(oracle[j]).epsilon(1e-9));
  }
}

TEST_CASE("least_squares with intercept recovers affine model") {
  Matrix x(4, 1);
  x(0, 0) = 0;
  x(1, 0) = 1;
  x(2, 0) = 2;
  x(3, 0) = 3;
  auto b = least_squares(x, {1, 3, 5, 7}, true);  // y = 2x + 1
  REQUIRE(b.size() == 2);
  CHECK(b[0] == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(b[1] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("sym_eigen on diagonal matrix") {
  Matrix a(2, 2);
  a(0, 0) = 3;
  a(1, 1) = 1;
  auto [vals, vecs] = sym_eigen(a);
  CHECK(vals[0] == doctest::Approx(3.0));
  CHECK(vals[1] == doctest::Approx(1.0));
  CHECK(std::fabs(vecs(0, 0)) == doctest::Approx(1.0));
  CHECK(std::fabs(vecs(1, 1)) == doctest::Approx(1.0));
}

TEST_CASE("sym_eigen on [[2,1],[1,2]]") {
  Matrix a(2, 2);
  a(0, 0) = 2;
  a(0, 1) = 1;
  a(1, 0) = 1;
  a(1, 1) = 2;
  auto [vals, vecs] = sym_eigen(a);
  CHECK(vals[0] == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(vals[1] == doctest::Approx(1.0).epsilon(1e-12));
  double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  CHECK(std::fabs(vecs(0, 0)) == doctest::Approx(inv_sqrt2));
  CHECK(vecs(0, 0) == doctest::Approx(vecs(1, 0)));  // first eigenvector is [1,1]/sqrt(2)
}

TEST_CASE("sym_eigen reconstructs random symmetric matrices") {
  std::mt19937_64 gen(3);
  for (int rep = 0; rep < 10; ++rep) {
    Matrix m = random_matrix(gen, 6, 6);
    Matrix a(6, 6);
    for (std::size_t i = 0; i < 6; ++i)
      for (std::size_t j = 0; j < 6; ++j) a(i, j) = 0.5 * (m(i, j) + m(j, i));
    auto [vals, vecs] = sym_eigen(a);
    // reconstruct V diag(vals) V'
    double max_err = 0;
    for (std::size_t i = 0; i < 6; ++i)
      for (std::size_t j = 0; j < 6; ++j) {
        double s = 0;
        for (std::size_t k = 0; k < 6; ++k) s += vecs(i, k) * vals[k] * vecs(j, k);
        max_err = std::max(max_err, std::fabs(s - a(i, j)));
      }
    CHECK(max_err < 1e-8);
    for (std::size_t k = 1; k < 6; ++k) CHECK(vals[k - 1] >= vals[k]);
  }
}

TEST_CASE("pearson_r hand cases") {
  CHECK(pearson_r({1, 2, 3}, {1, 2, 3}) == doctest::Approx(1.0));
  CHECK(pearson_r({1, 2, 3}, {3, 2, 1}) == doctest::Approx(-1.0));
  // dx=[-1,0,1], dy=[-1,1,0]: r = 1/2
  CHECK(pearson_r({1, 2, 3}, {1, 3, 2}) == doctest::Approx(0.5));
  CHECK_THROWS(pearson_r({1, 1, 1}, {1, 2, 3}));
}

TEST_CASE("pearson_p limits and quadrature cross-check") {
  CHECK(pearson_p(0.0, 10) == doctest::Approx(1.0));
  CHECK(pearson_p(1.0, 10) == 0.0);
  CHECK(pearson_p(-1.0, 10) == 0.0);
  // r = 0.5, n = 12: t ~ 1.8257 with 10 df, two-sided p ~ 0.0980
  CHECK(pearson_p(0.5, 12) == doctest::Approx(0.0980).epsilon(5e-3));
  CHECK(pearson_p(0.5, 12) ==
        doctest::Approx(testutil::pearson_p_quadrature(0.5, 12)).epsilon(1e-9));
}

TEST_CASE("t_sf limits and known quantile") {
  CHECK(t_sf(0.0, 5) == doctest::Approx(0.5));
  CHECK(t_sf(1e8, 5) == doctest::Approx(0.0).epsilon(1e-12));
  // 97.5% quantile of t(4) is 2.776
  CHECK(t_sf(2.776, 4) == doctest::Approx(0.025).epsilon(2e-3));
}

TEST_CASE("t_sf matches quadrature oracle across a grid") {
  for (double df : {2.0, 4.0, 9.0, 30.0})
    for (double t : {0.1, 0.7, 1.5, 2.776, 5.0})
      CHECK(t_sf(t, df) == doctest::Approx(testutil::t_sf_quadrature(t, df)).epsilon(1e-8));
}

TEST_CASE("rng streams are distinct, deterministic, and roughly uniform") {
  RngStream a(0, 0), b(0, 1);
  bool differ = false;
  for (int i = 0; i < 10; ++i)
    if (a.uniform() != b.uniform()) differ = true;
  CHECK(differ);

  RngStream c1(7, 3), c2(7, 3);
  for (int i = 0; i < 100; ++i) CHECK(c1.uniform() == c2.uniform());

  RngStream parent(123, 0);
  for (int s = 0; s < 64; ++s) {
    RngStream child = split_rng(parent, s);
    double m = 0;
    for (int i = 0; i < 1000; ++i) m += child.uniform();
    m /= 1000;
    CHECK(m > 0.45);
    CHECK(m < 0.55);
  }
}

TEST_CASE("shuffle is a permutation and seed-stable") {
  RngStream r1(5, 0), r2(5, 0);
  std::vector<int> v1{0, 1, 2, 3, 4, 5, 6, 7}, v2 = v1;
  r1.shuffle(v1);
  r2.shuffle(v2);
  CHECK(v1 == v2);
  std::vector<int> sorted = v1;
  std::sort(sorted.begin(), sorted.end());
  CHECK(sorted == std::vector<int>{0, 1, 2, 3, 4, 5, 6, 7});
}

TEST_CASE("matrix validate rejects non-finite entries") {
  Matrix m(2, 2);
  m(0, 0) = std::nan("");
  CHECK_THROWS(m.validate());
}
