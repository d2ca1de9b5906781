#include <cmath>
#include <random>

#include "builders.hpp"
#include "doctest.h"
#include "oracles.hpp"
#include "vqalign/errors.hpp"
#include "vqalign/metric.hpp"

using namespace vqalign;
namespace oracle = testkit::oracle;

TEST_SUITE("metric") {

TEST_CASE("distances match the sort-median L2 oracle") {
  std::mt19937_64 rng(77);
  for (int t = 0; t < 20; ++t) {
    testkit::ManifestSpec spec;
    spec.humans = 1 + rng() % 4;
    spec.vlms = {Provider::Pixtral, Provider::Gemini, Provider::Llama};
    spec.vlms.resize(rng() % 4);
    spec.videos = 1 + rng() % 2;
    const auto m = testkit::make_manifest(spec);
    const auto set = testkit::random_set(m, 1 + rng() % 48, rng);
    const auto table = metric::distance_to_median(set, m);
    REQUIRE(table.rows.size() == m.systems.size() * m.cells().size());
    std::size_t row = 0;
    for (const auto& c : m.cells()) {
      oracle::Rows x;
      for (const auto& s : m.systems) x.push_back(set.find(s.id, c.video_id, c.qid)->values);
      const auto med = oracle::median(x);
      for (std::size_t i = 0; i < m.systems.size(); ++i, ++row) {
        const auto& r = table.rows[row];
        CHECK(r.system_id == m.systems[i].id);
        CHECK(r.video_id == c.video_id);
        CHECK(r.qid == c.qid);
        CHECK(r.block == block_of_qid(c.qid));
        CHECK(std::abs(r.distance - oracle::l2(x[i], med)) <= 1e-12);
      }
    }
  }
}

TEST_CASE("identical answers give zero, two systems give equal distances") {
  testkit::ManifestSpec spec;
  spec.humans = 3;
  spec.vlms = {};
  spec.videos = 1;
  auto m = testkit::make_manifest(spec);
  std::mt19937_64 rng(1);
  embedding::EmbeddedAnswerSet set;
  set.dimension = 6;
  for (const auto& c : m.cells()) {
    const auto v = testkit::random_unit(6, rng);
    for (const auto& s : m.systems) set.vectors[{s.id, c.video_id, c.qid}] = {v, "m", true};
  }
  for (const auto& r : metric::distance_to_median(set, m).rows) CHECK(r.distance == 0.0);

  m.systems.resize(2);
  const auto two = testkit::random_set(m, 9, rng);
  const auto table = metric::distance_to_median(two, m);
  for (std::size_t i = 0; i < table.rows.size(); i += 2) {
    CHECK(table.rows[i].distance == table.rows[i + 1].distance);
    const auto& a = two.find(m.systems[0].id, table.rows[i].video_id, table.rows[i].qid)->values;
    const auto& b = two.find(m.systems[1].id, table.rows[i].video_id, table.rows[i].qid)->values;
    CHECK(table.rows[i].distance == doctest::Approx(oracle::l2(a, b) / 2).epsilon(1e-12));
  }
}

TEST_CASE("group scope uses separate medians and cells without vectors are skipped") {
  testkit::ManifestSpec spec;
  spec.humans = 2;
  spec.vlms = {Provider::Pixtral, Provider::Gemini};
  spec.videos = 1;
  const auto m = testkit::make_manifest(spec);
  std::mt19937_64 rng(2);
  auto set = testkit::random_set(m, 5, rng);
  for (const auto& s : m.systems) set.vectors.erase({s.id, "clip01", 4});
  const auto table = metric::distance_to_median(set, m, metric::MedianScope::Group);
  REQUIRE(table.skipped.size() == 1);
  CHECK(table.skipped[0] == CellKey{"clip01", 4});
  CHECK(table.rows.size() == 4 * 14);
  const auto& h1 = set.find("human01", "clip01", 1)->values;
  const auto& h2 = set.find("human02", "clip01", 1)->values;
  CHECK(table.rows[0].distance == doctest::Approx(oracle::l2(h1, h2) / 2).epsilon(1e-12));
}

TEST_CASE("median embedding is not re-normalized") {
  std::vector<embedding::EmbeddingVector> vs{{{1, 0}, "m", true}, {{0, 1}, "m", true}};
  const auto med = metric::median_embedding(vs);
  CHECK(med.values == std::vector<double>{0.5, 0.5});
  CHECK_FALSE(med.unit_norm);
  CHECK_THROWS_AS(metric::median_embedding(std::span<const embedding::EmbeddingVector>{}), ComputeError);
}

TEST_CASE("summary quantiles and histogram") {
  const std::vector<double> v{0.1, 0.4, 0.2, 0.3, 2.5};
  const auto s = metric::summarize(v, {});
  CHECK(s.count == 5);
  CHECK(s.mean == doctest::Approx(0.7));
  CHECK(s.median == doctest::Approx(0.3));
  CHECK(s.q1 == doctest::Approx(0.2));
  CHECK(s.q3 == doctest::Approx(0.4));
  CHECK(s.edges.size() == 41);
  CHECK(s.counts.size() == 40);
  CHECK(s.counts.back() == 1);
  CHECK(s.above_range == 1);
  std::size_t total = 0;
  for (auto c : s.counts) total += c;
  CHECK(total == 5);
  CHECK(s.counts[2] == 1);  // 0.1 in [0.1, 0.15)
  CHECK_THROWS_AS(metric::summarize(std::vector<double>{}, {}), ComputeError);
  CHECK_THROWS_AS(metric::summarize(v, {1.0, 1.0, 4}), ConfigError);
}

TEST_CASE("distance table csv and grouped summaries") {
  testkit::ManifestSpec spec;
  spec.videos = 1;
  const auto m = testkit::make_manifest(spec);
  std::mt19937_64 rng(3);
  const auto table = metric::distance_to_median(testkit::random_set(m, 4, rng), m);
  const auto csv = table.to_csv();
  CHECK(csv.starts_with("system_id,video_id,qid,block,kind,distance\nhuman01,clip01,1,variable,human,"));
  const auto groups = metric::summarize_distances(table, {});
  CHECK(groups.size() == 6);
  CHECK(groups.at({SystemKind::Vlm, Block::Counterfactual}).count == 5);
  CHECK_THROWS_AS(metric::summarize_distances(metric::MedianDistanceTable{}, {}), ComputeError);
  CHECK(metric::parse_median_scope("group") == metric::MedianScope::Group);
  CHECK_THROWS_AS(metric::parse_median_scope("both"), ConfigError);
}

}
