#include <cmath>
#include <random>

#include "builders.hpp"
#include "doctest.h"
#include "oracles.hpp"
#include "vqalign/errors.hpp"
#include "vqalign/pca.hpp"

using namespace vqalign;
namespace oracle = testkit::oracle;

namespace {

// Columns with well separated spreads so the leading axes are well conditioned.
std::vector<pca::KeyedVector> anisotropic(std::size_t n, std::size_t d, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  std::vector<pca::KeyedVector> out;
  for (std::size_t i = 0; i < n; ++i) {
    pca::KeyedVector kv{"s" + std::to_string(i % 3), "v", int(i) + 1, {}};
    for (std::size_t k = 0; k < d; ++k) kv.values.push_back(g(rng) * 3.0 / (1.0 + k));
    out.push_back(kv);
  }
  return out;
}

}  // namespace

TEST_SUITE("pca") {

TEST_CASE("ratios, axes and scores match the Jacobi eigensolve up to sign") {
  std::mt19937_64 rng(31);
  for (int t = 0; t < 25; ++t) {
    const std::size_t d = 2 + rng() % 10;
    const auto vs = anisotropic(d + 5 + rng() % 20, d, rng);
    oracle::Rows x;
    for (const auto& v : vs) x.push_back(v.values);
    const auto ref = oracle::pca(x);
    const auto p = pca::pca_2d(vs);
    CHECK_FALSE(p.rank_deficient);
    for (int k = 0; k < 2; ++k) {
      CHECK(std::abs(p.explained_variance_ratio[k] - ref.ratio[k]) <= 1e-9);
      double dot = 0;
      for (std::size_t j = 0; j < d; ++j) dot += p.component_axes[k][j] * ref.axes[k][j];
      const double sign = dot < 0 ? -1.0 : 1.0;
      for (std::size_t j = 0; j < d; ++j) CHECK(std::abs(p.component_axes[k][j] - sign * ref.axes[k][j]) <= 1e-9);
      for (std::size_t i = 0; i < vs.size(); ++i) {
        const double got = k == 0 ? p.coords[i].x : p.coords[i].y;
        CHECK(std::abs(got - sign * ref.scores[i][k]) <= 1e-9);
      }
    }
  }
}

TEST_CASE("axis sign convention makes the largest loading positive") {
  std::mt19937_64 rng(5);
  const auto p = pca::pca_2d(anisotropic(20, 4, rng));
  for (const auto& axis : p.component_axes) {
    std::size_t arg = 0;
    for (std::size_t j = 1; j < axis.size(); ++j)
      if (std::abs(axis[j]) > std::abs(axis[arg])) arg = j;
    CHECK(axis[arg] > 0);
  }
}

TEST_CASE("ratios are bounded and sum at most one") {
  std::mt19937_64 rng(12);
  const auto p = pca::pca_2d(anisotropic(30, 8, rng));
  CHECK(p.explained_variance_ratio[0] >= p.explained_variance_ratio[1]);
  CHECK(p.ratio_sum() <= 1.0 + 1e-12);
  CHECK(p.ratio_sum() > 0.0);
}

TEST_CASE("collinear data is rank deficient") {
  std::vector<pca::KeyedVector> vs;
  for (int i = 0; i < 5; ++i) vs.push_back({"s", "v", i + 1, {double(i), 2.0 * i, -1.0 * i}});
  const auto p = pca::pca_2d(vs);
  CHECK(p.rank_deficient);
  CHECK(p.explained_variance_ratio[0] == doctest::Approx(1.0));
  CHECK(p.explained_variance_ratio[1] == 0.0);
  for (const auto& c : p.coords) CHECK(c.y == 0.0);
}

TEST_CASE("degenerate inputs throw") {
  std::vector<pca::KeyedVector> two{{"a", "v", 1, {1, 2}}, {"b", "v", 1, {2, 3}}};
  CHECK_THROWS_AS(pca::pca_2d(two), ComputeError);
  std::vector<pca::KeyedVector> same(4, {"a", "v", 1, {1, 2, 3}});
  CHECK_THROWS_WITH_AS(pca::pca_2d(same), doctest::Contains("identical"), ComputeError);
  std::vector<pca::KeyedVector> one_d(4, {"a", "v", 1, {1}});
  CHECK_THROWS_AS(pca::pca_2d(one_d), ComputeError);
}

TEST_CASE("block collection, csv and metadata") {
  testkit::ManifestSpec spec;
  spec.humans = 1;
  spec.videos = 2;
  const auto m = testkit::make_manifest(spec);
  std::mt19937_64 rng(2);
  const auto set = testkit::random_set(m, 6, rng);
  const auto vs = pca::collect_block(set, m, rsa::AnalysisBlock::MultipleChoice);
  REQUIRE(vs.size() == 2 * 2 * 5);
  CHECK(vs.front().system_id == "human01");
  CHECK(vs.front().qid == 6);
  CHECK(vs.back().system_id == "pixtral");
  const auto p = pca::pca_2d(vs, rsa::AnalysisBlock::MultipleChoice);
  const auto csv = pca::to_csv(p, m);
  CHECK(csv.starts_with("key,x,y,kind\nhuman01/clip01/6,"));
  CHECK(csv.find(",vlm\n") != std::string::npos);
  const auto meta = pca::meta_json(p);
  CHECK(meta.at("block") == "multiple_choice");
  CHECK(meta.at("points") == 20);
}

}
