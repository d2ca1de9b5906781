#include <cmath>
#include <fstream>
#include <random>
#include <thread>

#include "builders.hpp"
#include "doctest.h"
#include "httplib.h"
#include "vqalign/curation.hpp"
#include "vqalign/embedding.hpp"
#include "vqalign/errors.hpp"

using namespace vqalign;
using namespace vqalign::embedding;

namespace {

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  double ab = 0, aa = 0, bb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  return ab / std::sqrt(aa * bb);
}

}  // namespace

TEST_SUITE("embedding") {

TEST_CASE("hash backend is deterministic and word-sensitive") {
  HashBackend a(64, 1), b(64, 1), c(64, 2);
  const std::vector<std::string> texts{"the bus stops", "The bus STOPS!", "a dog barks loudly"};
  const auto va = a.embed_batch("m", texts);
  CHECK(va == b.embed_batch("m", texts));
  CHECK(va[0] == va[1]);
  CHECK(va != c.embed_batch("m", texts));
  CHECK(va != a.embed_batch("other-model", texts));
  CHECK(cosine(va[0], a.embed_batch("m", std::vector<std::string>{"the bus turns"})[0]) >
        cosine(va[0], va[2]));
  CHECK_THROWS_AS(HashBackend(0, 1), ConfigError);
}

TEST_CASE("embedder normalizes, caches and pins the dimension") {
  HashBackend backend(16, 0);
  Embedder e(backend, "m", true);
  const auto v = e.embed("hello world");
  CHECK(v.norm() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(v.unit_norm);
  CHECK(e.dimension() == 16);
  Embedder raw(backend, "m", false);
  CHECK(raw.embed("hello world").norm() > 1.0);
  HashBackend other(8, 0);
  Embedder pinned(other, "m", true, 16);
  CHECK_THROWS_AS(pinned.embed("x"), ConfigError);
  const auto all = e.embed_all(std::vector<std::string>{"b", "a", "b"});
  CHECK(all.size() == 2);
}

TEST_CASE("fixture backend keys by content hash") {
  const auto dir = testkit::scratch("embed-fixture");
  {
    std::ofstream f(dir / "f.jsonl");
    const std::vector<double> v1{1, 0, 0}, v2{0, 2, 0};
    f << FixtureBackend::fixture_line("m", "Yes", v1) << "\n" << FixtureBackend::fixture_line("m", "No", v2) << "\n";
  }
  FixtureBackend fb(dir / "f.jsonl");
  const auto out = fb.embed_batch("m", std::vector<std::string>{"No", "Yes"});
  CHECK(out[0] == std::vector<double>{0, 2, 0});
  CHECK(out[1] == std::vector<double>{1, 0, 0});
  CHECK_THROWS_AS(fb.embed_batch("m", std::vector<std::string>{"Maybe"}), TransportError);
  CHECK_THROWS_AS(fb.embed_batch("m2", std::vector<std::string>{"Yes"}), TransportError);
  CHECK(fb.version().starts_with("fixture/"));
  CHECK_THROWS_AS(FixtureBackend(dir / "missing.jsonl"), ConfigError);
}

TEST_CASE("pooling is the mean, renormalized and order invariant") {
  std::mt19937_64 rng(4);
  std::vector<EmbeddingVector> vs;
  for (int i = 0; i < 10; ++i) vs.push_back({testkit::random_unit(12, rng), "m", true});
  const auto pooled = pool_repetitions(vs);
  std::vector<double> mean(12, 0.0);
  for (const auto& v : vs)
    for (int k = 0; k < 12; ++k) mean[k] += v.values[k] / 10.0;
  double n = 0;
  for (double x : mean) n += x * x;
  for (int k = 0; k < 12; ++k) CHECK(pooled.values[k] == doctest::Approx(mean[k] / std::sqrt(n)).epsilon(1e-12));
  for (int t = 0; t < 5; ++t) {
    std::shuffle(vs.begin(), vs.end(), rng);
    CHECK(pool_repetitions(vs).values == pooled.values);
  }
  std::vector<EmbeddingVector> opposite{{{1, 0}, "m", true}, {{-1, 0}, "m", true}};
  CHECK_THROWS_AS(pool_repetitions(opposite), ComputeError);
  std::vector<EmbeddingVector> mixed{{{1, 0}, "m", true}, {{1, 0, 0}, "m", true}};
  CHECK_THROWS_AS(pool_repetitions(mixed), ComputeError);
}

TEST_CASE("embedded set: pooled, single and missing cells") {
  testkit::ManifestSpec spec;
  spec.humans = 1;
  spec.vlms = {Provider::Pixtral};
  spec.videos = 1;
  spec.repetitions = 3;
  const auto m = testkit::make_manifest(spec);
  std::mt19937_64 rng(2);
  auto rs = curation::curate(testkit::make_responses(m, rng), m).records;
  for (auto& r : rs)
    if (r.system_id == "pixtral" && r.qid == 9) {
      r.status = ResponseStatus::Ignored;
      r.normalized_text.reset();
    }
  for (auto& r : rs)
    if (r.system_id == "pixtral" && r.qid == 12 && r.repetition == 0) {
      r.status = ResponseStatus::Ignored;
    }

  HashBackend backend(32, 0);
  Embedder e(backend, "m", true);
  const auto pooled = build_embedded_set(rs, m, e, PoolingMode::Pooled);
  CHECK(pooled.cells_for("human01") == 15);
  CHECK(pooled.cells_for("pixtral") == 14);
  REQUIRE(pooled.missing.size() == 1);
  CHECK(pooled.missing[0].cell.qid == 9);
  CHECK(pooled.missing[0].reason == "all repetitions ignored");

  const auto single = build_embedded_set(rs, m, e, PoolingMode::Single);
  const auto rep1 = std::find_if(rs.begin(), rs.end(), [](const ResponseRecord& r) {
    return r.system_id == "pixtral" && r.qid == 12 && r.repetition == 1;
  });
  CHECK(single.find("pixtral", "clip01", 12)->values == e.embed(rep1->effective_text()).values);

  const auto back = EmbeddedAnswerSet::parse(pooled.serialize());
  CHECK(back.vectors == pooled.vectors);
  CHECK(back.missing.size() == 1);
  CHECK(back.dimension == 32);
  CHECK(back.serialize() == pooled.serialize());
}

TEST_CASE("http backend batches against a local server") {
  httplib::Server svr;
  std::atomic<int> calls{0};
  svr.Post("/embed", [&](const httplib::Request& req, httplib::Response& res) {
    ++calls;
    const auto j = Json::parse(req.body);
    Json vecs = Json::array();
    for (const auto& t : j.at("texts")) vecs.push_back({double(t.get<std::string>().size()), 1.0});
    res.set_content(Json{{"vectors", vecs}}.dump(), "application/json");
  });
  const int port = svr.bind_to_any_port("127.0.0.1");
  std::thread th([&] { svr.listen_after_bind(); });
  svr.wait_until_ready();

  HttpBackend hb("http://127.0.0.1:" + std::to_string(port) + "/embed", 2, 2);
  const std::vector<std::string> texts{"a", "bb", "ccc", "dddd", "eeeee"};
  const auto out = hb.embed_batch("m", texts);
  CHECK(calls == 3);
  for (std::size_t i = 0; i < texts.size(); ++i) CHECK(out[i][0] == double(i + 1));
  svr.stop();
  th.join();

  HttpBackend dead("http://127.0.0.1:" + std::to_string(port) + "/embed");
  CHECK_THROWS_AS(dead.embed_batch("m", texts), TransportError);
}

TEST_CASE("backend factory and known models") {
  CHECK(known_dimension("all-mpnet-base-v2") == 768u);
  CHECK(known_models().size() == 3);
  CHECK_FALSE(known_dimension("nope").has_value());
  BackendConfig c;
  c.kind = "hash";
  c.dimension = 8;
  CHECK(make_backend(c)->version() == "hash-v1/d8/seed0");
  c.kind = "http";
  CHECK_THROWS_AS(make_backend(c), ConfigError);
  c.kind = "magic";
  CHECK_THROWS_AS(make_backend(c), ConfigError);
  CHECK(parse_pooling_mode("single") == PoolingMode::Single);
  CHECK_THROWS_AS(parse_pooling_mode("mean"), ConfigError);
}

}
