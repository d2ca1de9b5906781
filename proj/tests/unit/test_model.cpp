#include <random>

#include "builders.hpp"
#include "doctest.h"
#include "vqalign/errors.hpp"
#include "vqalign/model.hpp"
#include "vqalign/util.hpp"

using namespace vqalign;

TEST_SUITE("model") {

TEST_CASE("manifest serialization round trips byte for byte") {
  testkit::ManifestSpec spec;
  spec.vlms = {Provider::Pixtral, Provider::Llama, Provider::CogVlm};
  const auto m = testkit::make_manifest(spec);
  validate_manifest(m);
  const auto text = serialize_manifest(m);
  const auto back = parse_manifest(text);
  CHECK(back == m);
  CHECK(serialize_manifest(back) == text);
}

TEST_CASE("responses round trip and keep optional fields") {
  testkit::ManifestSpec spec;
  spec.repetitions = 2;
  const auto m = testkit::make_manifest(spec);
  std::mt19937_64 rng(1);
  auto rs = testkit::make_responses(m, rng);
  rs[3].status = ResponseStatus::Modified;
  rs[3].normalized_text = "Yes";
  const auto text = serialize_responses(rs);
  const auto back = parse_responses(text);
  CHECK(back == rs);
  CHECK(serialize_responses(back) == text);
  CHECK(back[3].effective_text() == "Yes");
}

TEST_CASE("rationals") {
  CHECK(Rational::from_double(0.5) == Rational{1, 2});
  CHECK(Rational::from_double(10) == Rational{10, 1});
  CHECK(Rational{2, 4} == Rational{1, 2});
  CHECK_THROWS_AS(Rational::from_double(0.0), ValidationError);
  CHECK_THROWS_AS(Rational::from_double(-1.0), ValidationError);
}

TEST_CASE("block membership and option sets") {
  CHECK(block_of_qid(1) == Block::Variable);
  CHECK(block_of_qid(5) == Block::Variable);
  CHECK(block_of_qid(6) == Block::MultipleChoice);
  CHECK(block_of_qid(10) == Block::MultipleChoice);
  CHECK(block_of_qid(11) == Block::Counterfactual);
  CHECK(block_of_qid(15) == Block::Counterfactual);
  CHECK(pedestrian_count_options() == std::vector<std::string>{"0", "1", "2-3", "4-6", "7-10", "11-20", "21+"});
  CHECK(scale_options().size() == 10);
}

TEST_CASE("manifest validation names the offending record") {
  testkit::ManifestSpec spec;
  auto base = testkit::make_manifest(spec);

  auto m = base;
  m.systems[0].provider_config = harness::default_provider_config(Provider::Pixtral);
  CHECK_THROWS_WITH_AS(validate_manifest(m), doctest::Contains("human01"), ValidationError);

  m = base;
  m.systems.back().provider_config->frame_rate_fps = {2, 1};
  CHECK_THROWS_WITH_AS(validate_manifest(m), doctest::Contains("frame_rate_fps"), ValidationError);

  m = base;
  m.systems.back().provider_config->top_p = 0.0;
  CHECK_THROWS_AS(validate_manifest(m), ValidationError);

  m = base;
  m.videos[0].frame_count = 49;
  CHECK_THROWS_WITH_AS(validate_manifest(m), doctest::Contains("clip01"), ValidationError);

  m = base;
  m.questions[6].answer_format = AnswerFormat::OpenText;  // qid 7
  CHECK_THROWS_AS(validate_manifest(m), ValidationError);

  m = base;
  m.systems.push_back(m.systems[0]);
  CHECK_THROWS_WITH_AS(validate_manifest(m), doctest::Contains("duplicate"), ValidationError);

  m = base;
  m.variable_questions.push_back({"nowhere", 1, "text", std::nullopt});
  CHECK_THROWS_AS(validate_manifest(m), ValidationError);
}

TEST_CASE("parse errors point at the field") {
  CHECK_THROWS_AS(parse_manifest("{not json"), ValidationError);
  CHECK_THROWS_AS(parse_responses("{\"system_id\": \"a\"}\n"), ValidationError);
  CHECK_THROWS_AS(parse_provider("openai"), ValidationError);
}

TEST_CASE("response validation reports without throwing") {
  testkit::ManifestSpec spec;
  spec.repetitions = 2;
  spec.videos = 1;
  const auto m = testkit::make_manifest(spec);
  std::mt19937_64 rng(2);
  auto rs = testkit::make_responses(m, rng);
  CHECK(validate_responses(rs, m).ok());

  rs.push_back(rs.front());                                         // duplicate
  rs.push_back({"ghost", "clip01", 1, 0, "x", ResponseStatus::Raw, std::nullopt, ""});  // unknown system
  rs.push_back({"human01", "clip01", 2, 1, "x", ResponseStatus::Raw, std::nullopt, ""});  // human rep 1
  rs.push_back({"pixtral", "clip01", 2, 5, "x", ResponseStatus::Raw, std::nullopt, ""});  // rep >= 2
  std::erase_if(rs, [](const ResponseRecord& r) { return r.system_id == "human02" && r.qid == 9; });
  const auto report = validate_responses(rs, m);
  CHECK_FALSE(report.ok());
  CHECK(report.duplicates.size() == 1);
  CHECK(report.unknown_ids == std::vector<std::string>{"system:ghost"});
  CHECK(report.invariant_violations.size() == 2);
  REQUIRE(report.missing.size() == 1);
  CHECK(report.missing[0].system_id == "human02");
  CHECK(report.missing[0].qid == 9);
  CHECK(report.to_json().at("missing").size() == 1);
}

TEST_CASE("question text prefers per-clip variable questions") {
  testkit::ManifestSpec spec;
  const auto m = testkit::make_manifest(spec);
  CHECK(m.question_text("clip01", 3) == "What is object 3 doing in clip01?");
  CHECK(m.question_text("clip01", 7) == "Is this a recurrent driving scenario for you?");
  CHECK(m.cells().size() == 30);
  CHECK(m.cells()[15] == CellKey{"clip02", 1});
}

TEST_CASE("util helpers") {
  CHECK(util::sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  const std::vector<std::uint8_t> bytes{0, 1, 2, 250, 255};
  CHECK(util::base64_decode(util::base64_encode(bytes)) == bytes);
  CHECK(util::base64_encode(std::vector<std::uint8_t>{'M', 'a'}) == "TWE=");
  CHECK(util::format_double(0.1) == "0.1");
  CHECK(util::format_double(1.0) == "1");
  const auto u = util::split_url("http://127.0.0.1:8080/v1/embed");
  CHECK(u.base == "http://127.0.0.1:8080");
  CHECK(u.path == "/v1/embed");
  CHECK(util::split_url("https://host").path == "/");
  CHECK_THROWS_AS(util::split_url("host/path"), ConfigError);
  const auto dir = testkit::scratch("util");
  CHECK(util::write_if_changed(dir / "a.txt", "x"));
  CHECK_FALSE(util::write_if_changed(dir / "a.txt", "x"));
  CHECK(util::write_if_changed(dir / "a.txt", "y"));
}

}
