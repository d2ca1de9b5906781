#include "builders.hpp"
#include "doctest.h"
#include "vqalign/errors.hpp"
#include "vqalign/questions.hpp"
#include "vqalign/util.hpp"

using namespace vqalign;
using namespace vqalign::questions;

namespace {

Json meta_json(const std::string& id) {
  Json j{{"video_id", id}};
  for (const auto& a : meta_attributes()) {
    if (a.kind == LabelKind::Single)
      j[a.key] = a.display_name + " value";
    else
      j[a.key] = Json::array({a.display_name + " a", a.display_name + " b"});
  }
  return j;
}

const char* kReply = R"(Sure, here is the analysis.

**Sample #: 1**
**Name:** clip01

**Q1:** What is the ego vehicle doing?
**A1:** Turning left at the
intersection.

Q2: Are there pedestrians?
A2: Yes, two.
Q3) Is it raining?
A3) No.
Q4: What is the traffic light state?
A4: Green.
Q5: What road structure is present?
A5: A roundabout.

Sample #: 2
Name: clip02
Q1: a
A1: b
Q2: c
A2: d
Q3: e
A3: f
Q4: g
A4: h
Q5: i
A5: j

Let me know if you need more.
)";

struct Canned : harness::Transport {
  std::string text;
  Json last;
  harness::TransportReply send(const harness::ProviderRequest& r) override {
    last = r.document;
    return {text, "t"};
  }
};

}  // namespace

TEST_SUITE("questions") {

TEST_CASE("sixteen attributes in table order") {
  const auto& a = meta_attributes();
  REQUIRE(a.size() == 16);
  CHECK(a.front().key == "vehicle_actions");
  CHECK(a.back().key == "driving_environment");
  CHECK(a[1].kind == LabelKind::MultiOpen);
  CHECK(a[4].kind == LabelKind::Single);
}

TEST_CASE("meta-tag parsing and validation") {
  const auto r = parse_meta_tags(meta_json("clip01").dump(), "m");
  CHECK(r.video_id == "clip01");
  CHECK(r.values.at("traffic_signs").size() == 2);
  CHECK(to_json(r) == meta_json("clip01"));

  auto missing = meta_json("x");
  missing.erase("weather_conditions");
  CHECK_THROWS_WITH_AS(parse_meta_tags(missing.dump(), "m"), "m.weather_conditions: missing field", ValidationError);
  auto multi_single = meta_json("x");
  multi_single["traffic_lights"] = Json::array({"red", "green"});
  CHECK_THROWS_AS(parse_meta_tags(multi_single.dump(), "m"), ValidationError);
  auto extra = meta_json("x");
  extra["colour"] = "blue";
  CHECK_THROWS_WITH_AS(parse_meta_tags(extra.dump(), "m"), "m.colour: unknown field", ValidationError);
  std::string dup = meta_json("x").dump();
  dup.insert(1, R"("video_id":"y",)");
  CHECK_THROWS_AS(parse_meta_tags(dup, "m"), ValidationError);
  CHECK_THROWS_AS(parse_meta_tags("{", "m"), ValidationError);
}

TEST_CASE("metadata directory loads by clip id") {
  const auto dir = testkit::scratch("metadata");
  util::write_if_changed(dir / "clip01.json", meta_json("clip01").dump());
  util::write_if_changed(dir / "clip02.json", meta_json("other").dump());
  CHECK(load_metadata_dir(dir, {"clip01"}).size() == 1);
  CHECK_THROWS_AS(load_metadata_dir(dir, {"clip02"}), ValidationError);
  CHECK_THROWS_AS(load_metadata_dir(dir, {"clip03"}), ValidationError);
}

TEST_CASE("oracle prompt is verbatim with numbered samples") {
  const auto p = build_oracle_prompt({parse_meta_tags(meta_json("clip01").dump(), "a"),
                                      parse_meta_tags(meta_json("clip02").dump(), "b")});
  CHECK(p.system_instructions.starts_with(
      "You are an AI assistant specialized in analyzing driving scenarios. You will receive a list of JSON objects"));
  CHECK(p.system_instructions.find("3. Generate **five** relevant and contextually appropriate questions") !=
        std::string::npos);
  CHECK(p.system_instructions.ends_with("Q5: [Question 5]\nA5: [Answer 5]"));
  CHECK(p.starter_message.find("[Insert the list") == std::string::npos);
  CHECK(p.starter_message.find("not mentioned in the file.  [") != std::string::npos);
  const auto at = p.starter_message.find('[');
  const auto samples = nlohmann::ordered_json::parse(p.starter_message.substr(at));
  REQUIRE(samples.size() == 2);
  CHECK(samples[1]["#"] == 2);
  CHECK(samples[1]["Name"] == "clip02");
  CHECK(samples[0].begin().key() == "#");
  CHECK(std::next(samples[0].begin()).key() == "Name");
  CHECK_THROWS_AS(build_oracle_prompt({}), ValidationError);
}

TEST_CASE("oracle output parsing tolerates formatting") {
  const auto qas = parse_oracle_output(kReply);
  REQUIRE(qas.size() == 2);
  CHECK(qas[0].sample_number == 1);
  CHECK(qas[0].video_id == "clip01");
  CHECK(qas[0].pairs[0].question == "What is the ego vehicle doing?");
  CHECK(qas[0].pairs[0].answer == "Turning left at the intersection.");
  CHECK(qas[0].pairs[2].answer == "No.");
  CHECK(qas[1].pairs[4].answer == "j");
  CHECK(parse_oracle_output(render(qas)).size() == 2);
  CHECK(render(parse_oracle_output(render(qas))) == render(qas));
}

TEST_CASE("oracle output with the wrong number of pairs names the sample") {
  std::string four = "Sample #: 3\nName: c\nQ1: a\nA1: b\nQ2: a\nA2: b\nQ3: a\nA3: b\nQ4: a\nA4: b\n";
  CHECK_THROWS_WITH_AS(parse_oracle_output(four),
                       "sample 3: expected 5 question/answer pairs, found 4 questions and 4 answers", ParseError);
  CHECK_THROWS_AS(parse_oracle_output("Sample #: 1\nQ1: a\n"), ParseError);
  CHECK_THROWS_AS(parse_oracle_output("Sample #: 1\nName: x\nQ1: a\nQ1: b\n"), ParseError);
  CHECK(parse_oracle_output("no samples here").empty());
}

TEST_CASE("run_oracle sends a two-message chat") {
  Canned t;
  t.text = kReply;
  const auto qas = run_oracle({parse_meta_tags(meta_json("clip01").dump(), "a")}, t, "gpt-4o");
  CHECK(qas.size() == 2);
  CHECK(t.last.at("model") == "gpt-4o");
  REQUIRE(t.last.at("messages").size() == 2);
  CHECK(t.last.at("messages")[0].at("role") == "system");
  CHECK(t.last.at("messages")[1].at("role") == "user");
}

TEST_CASE("question bank") {
  const auto& bank = question_bank();
  REQUIRE(bank.size() == 10);
  CHECK(bank.front().qid == 6);
  CHECK(bank[2].text == "Estimate how many pedestrians are there in the scene?");
  for (const auto& q : bank) CHECK_NOTHROW(validate_question(q));
  const auto all = full_question_set();
  REQUIRE(all.size() == 15);
  for (int i = 0; i < 15; ++i) CHECK(all[i].qid == i + 1);
  CHECK(all[4].block == Block::Variable);
  CHECK(all[10].block == Block::Counterfactual);
}

TEST_CASE("merge replaces a clip's variable questions") {
  auto m = testkit::make_manifest({});
  const auto qas = parse_oracle_output(kReply);
  merge_into_manifest(m, qas);
  CHECK(m.question_text("clip01", 1) == "What is the ego vehicle doing?");
  CHECK(m.question_text("clip02", 5) == "i");
  CHECK(m.variable_questions.size() == 10);
  CHECK_NOTHROW(validate_manifest(m));
  auto bad = qas;
  bad[0].video_id = "clip99";
  CHECK_THROWS_AS(merge_into_manifest(m, bad), ValidationError);
}

}
