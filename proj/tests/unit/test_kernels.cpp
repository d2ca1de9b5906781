#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "vqalign/kernels.hpp"

using namespace vqalign::kernels;
namespace oracle = testkit::oracle;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1, 1);
  Matrix m(r, c);
  for (auto& x : m.data) x = u(rng);
  return m;
}

oracle::Rows rows_of(const Matrix& m) {
  oracle::Rows out(m.rows);
  for (std::size_t i = 0; i < m.rows; ++i) out[i].assign(m.row(i).begin(), m.row(i).end());
  return out;
}

}  // namespace

TEST_SUITE("kernels") {

TEST_CASE("serial and parallel gramians agree with the triple loop") {
  std::mt19937_64 rng(11);
  for (int t = 0; t < 30; ++t) {
    const auto x = random_matrix(1 + rng() % 40, 1 + rng() % 70, rng);
    const auto ref = oracle::gramian(rows_of(x));
    const auto s = serial::gramian(x);
    const auto p = parallel::gramian(x);
    for (std::size_t i = 0; i < x.rows; ++i)
      for (std::size_t j = 0; j < x.rows; ++j) {
        CHECK(s(i, j) == doctest::Approx(ref[i][j]).epsilon(1e-12));
        CHECK(std::abs(s(i, j) - p(i, j)) <= 1e-12);
        CHECK(s(i, j) == s(j, i));
      }
  }
}

TEST_CASE("row correlations mark constant rows as undefined") {
  Matrix v(3, 4);
  const double rows[3][4] = {{1, 2, 3, 4}, {2, 4, 6, 8.5}, {5, 5, 5, 5}};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 4; ++j) v(i, j) = rows[i][j];
  for (const auto& c : {serial::row_correlations(v), parallel::row_correlations(v)}) {
    CHECK(c(0, 0) == 1.0);
    CHECK(c(2, 2) == 1.0);
    CHECK(std::isnan(c(0, 2)));
    CHECK(std::isnan(c(2, 1)));
    CHECK(c(0, 1) == doctest::Approx(*oracle::pearson({1, 2, 3, 4}, {2, 4, 6, 8.5})).epsilon(1e-12));
  }
}

TEST_CASE("column medians match sort-based medians for odd and even counts") {
  std::mt19937_64 rng(5);
  for (std::size_t n : {1u, 2u, 3u, 8u, 13u}) {
    const auto x = random_matrix(n, 17, rng);
    const auto ref = oracle::median(rows_of(x));
    const auto s = serial::column_medians(x);
    const auto p = parallel::column_medians(x);
    for (std::size_t k = 0; k < ref.size(); ++k) {
      CHECK(s[k] == ref[k]);
      CHECK(p[k] == ref[k]);
    }
  }
}

TEST_CASE("row distances match direct summation") {
  std::mt19937_64 rng(9);
  const auto x = random_matrix(25, 33, rng);
  const auto point = random_matrix(1, 33, rng);
  const std::vector<double> pt(point.data.begin(), point.data.end());
  const auto s = serial::row_distances(x, pt);
  const auto p = parallel::row_distances(x, pt);
  for (std::size_t i = 0; i < x.rows; ++i) {
    CHECK(std::abs(s[i] - oracle::l2(rows_of(x)[i], pt)) <= 1e-12);
    CHECK(std::abs(s[i] - p[i]) <= 1e-12);
  }
}

TEST_CASE("negligible spread relative to magnitude") {
  const std::vector<double> big{1e6, 1e6, 1e6};
  CHECK(negligible_spread(0.0, big));
  CHECK(negligible_spread(1e-20, big));
  const std::vector<double> varied{1, 2, 3};
  CHECK_FALSE(negligible_spread(2.0, varied));
}

TEST_CASE("parallel kernels report a thread count") { CHECK(parallel::max_threads() >= 1); }

}
