#include <cmath>
#include <fstream>

#include "builders.hpp"
#include "doctest.h"
#include "oracles.hpp"
#include "vqalign/capacity.hpp"
#include "vqalign/errors.hpp"
#include "vqalign/util.hpp"

using namespace vqalign;
using namespace vqalign::capacity;
namespace oracle = testkit::oracle;

namespace {

std::vector<std::uint8_t> mask(const Bitmap& b, bool (*pred)(const std::uint8_t*)) {
  std::vector<std::uint8_t> m(static_cast<std::size_t>(b.width) * b.height);
  for (int y = 0; y < b.height; ++y)
    for (int x = 0; x < b.width; ++x) m[static_cast<std::size_t>(y) * b.width + x] = pred(b.at(x, y));
  return m;
}

bool is_green(const std::uint8_t* p) { return p[1] > 128 && p[0] < 100 && p[2] < 100; }
bool is_red(const std::uint8_t* p) { return p[2] > 128 && p[0] < 100 && p[1] < 100; }

const CapacityCase kFive = generate_case(5, 0).first;

}  // namespace

TEST_SUITE("capacity") {

TEST_CASE("the star appears only in its frame") {
  for (int star = 0; star < 5; ++star) {
    const auto [c, frames] = generate_case(5, star);
    REQUIRE(frames.size() == 5);
    for (int k = 0; k < 5; ++k) {
      const auto bmp = decode_png(frames[k].png);
      CHECK(bmp.width == 512);
      const auto green = oracle::components(mask(bmp, is_green), bmp.width, bmp.height);
      if (k == star) {
        REQUIRE(green.size() == 1);
        CHECK(green[0] > 300);
      } else {
        CHECK(green.empty());
      }
      const auto red = oracle::components(mask(bmp, is_red), bmp.width, bmp.height);
      REQUIRE(red.size() == 1);
      CHECK(std::abs(red[0] - 3.14159 * 24 * 24) < 150);
    }
  }
}

TEST_CASE("ball moves strictly up and to the right") {
  const auto [c, frames] = generate_case(50, 10);
  for (std::size_t k = 1; k < c.ball_positions.size(); ++k) {
    CHECK(c.ball_positions[k].x > c.ball_positions[k - 1].x);
    CHECK(c.ball_positions[k].y < c.ball_positions[k - 1].y);
  }
  CHECK(c.ball_positions.front() == Point{40, 472});
  CHECK(c.ball_positions.back() == Point{472, 40});
}

TEST_CASE("generation is byte deterministic and names are opaque") {
  const auto a = generate_case(5, 2).second;
  const auto b = generate_case(5, 2).second;
  for (std::size_t k = 0; k < a.size(); ++k) {
    CHECK(a[k].png == b[k].png);
    CHECK(a[k].filename == b[k].filename);
    CHECK(a[k].filename == util::sha256_hex(a[k].png).substr(0, 16) + ".png");
  }
  for (std::size_t k = 1; k < a.size(); ++k) CHECK(a[k].filename != a[k - 1].filename);
}

TEST_CASE("invalid cases") {
  CHECK_THROWS_AS(generate_case(1, 0), ValidationError);
  CHECK_THROWS_AS(generate_case(5, 5), ValidationError);
  CHECK_THROWS_AS(generate_case(5, -1), ValidationError);
  CHECK_THROWS_AS(generate_case(200, 0, {128, 128}), ValidationError);
  CHECK_THROWS_AS(decode_png(std::vector<std::uint8_t>{1, 2}), DecodeError);
}

TEST_CASE("grading: direction and star with negation") {
  CHECK(grade_response("The red ball moves from the bottom-left to the top-right. A green star appears.", kFive).passed());
  CHECK(grade_response("It goes up and to the right; there is a green five-pointed shape.", kFive).passed());
  const auto wrong = grade_response("The ball moves towards the bottom left. A green star is visible.", kFive);
  CHECK_FALSE(wrong.direction_ok);
  CHECK(wrong.star_detected);
  const auto no_star = grade_response("The ball moves to the top right. I do not see any green star.", kFive);
  CHECK(no_star.direction_ok);
  CHECK_FALSE(no_star.star_detected);
  CHECK_FALSE(grade_response("Moves to the upper right. There isn't a star, only green grass.", kFive).star_detected);
  CHECK_FALSE(grade_response("Moves to the upper right. There is a yellow star.", kFive).star_detected);
  CHECK_FALSE(grade_response("Moving from the top right to the bottom left, green star.", kFive).direction_ok);
  CHECK(grade_response("Moving towards the upper right. No other objects... wait, a green star.", kFive).star_detected);
}

TEST_CASE("custom lexicon from json") {
  const auto lex = lexicon_from_json(Json{{"star_terms", {"\\bestrella\\b"}}, {"negation_window", 2}});
  CHECK(lex.negation_window == 2);
  CHECK(grade_response("top right, green estrella", kFive, lex).passed());
  CHECK_FALSE(grade_response("top right, green star", kFive, lex).passed());
}

TEST_CASE("frame counts and star schedule") {
  CHECK(frames_for({10, 1}) == 50);
  CHECK(frames_for({1, 1}) == 5);
  CHECK(frames_for({1, 2}) == 3);
  CHECK(star_schedule(5, 5) == std::vector<int>{0, 1, 2, 3, 4});
  CHECK(star_schedule(50, 5) == std::vector<int>{0, 12, 25, 37, 49});
  CHECK(star_schedule(3, 5) == std::vector<int>{0, 1, 2});
  CHECK(star_schedule(5, 1) == std::vector<int>{4});
}

TEST_CASE("grading fixture reproduces the pass/fail table") {
  const auto fixture = GradingFixture::load(std::string(VQALIGN_FIXTURES) + "/capacity_grading.json");
  const auto responder = fixture.responder();
  struct Row {
    Provider p;
    Rational fps;
    bool pass;
  };
  for (const auto& row : {Row{Provider::DeepSeek, {10, 1}, true}, Row{Provider::Pixtral, {10, 1}, false},
                          Row{Provider::Pixtral, {1, 1}, true}, Row{Provider::Qwen2, {10, 1}, true},
                          Row{Provider::CogVlm, {10, 1}, true}, Row{Provider::Gemini, {10, 1}, true},
                          Row{Provider::Llama, {1, 2}, true}}) {
    auto cfg = harness::default_provider_config(row.p);
    cfg.frame_rate_fps = row.fps;
    CapacityOptions opts;
    opts.iterations = row.p == Provider::Qwen2 || row.p == Provider::CogVlm ? 2 : 5;
    const auto report = run_capacity(cfg, responder, opts);
    INFO(to_string(row.p), " @ ", row.fps.value());
    CHECK(report.passed() == row.pass);
    if (row.p == Provider::Pixtral && !row.pass) {
      CHECK_FALSE(report.iterations[0].payload_ok);
      CHECK(report.iterations[0].error.find("at most 6") != std::string::npos);
    }
  }
}

TEST_CASE("missing fixture rows fail the iteration, not the run") {
  const GradingFixture empty(Json{{"responses", Json::array()}});
  const auto report = run_capacity(harness::default_provider_config(Provider::Gemini), empty.responder(),
                                   {5, 2, {}, {}, default_lexicon()});
  CHECK_FALSE(report.passed());
  CHECK(report.iterations.size() == 2);
  CHECK(report.iterations[0].error.find("no response") != std::string::npos);
  const auto j = report.to_json();
  CHECK(j.at("num_frames") == 5);
  CHECK(j.at("iterations").size() == 2);
  CHECK_THROWS_AS(GradingFixture(Json{{"responses", {{{"provider", "x"}}}}}), ValidationError);
}

TEST_CASE("written case keeps the order in case.json") {
  const auto dir = testkit::scratch("capacity-case");
  const auto [c, frames] = generate_case(5, 3);
  write_case(dir, c, frames);
  const auto meta = Json::parse(util::read_file(dir / "case.json"));
  CHECK(meta.at("star_frame_index") == 3);
  REQUIRE(meta.at("frames").size() == 5);
  for (std::size_t k = 0; k < 5; ++k) {
    CHECK(meta.at("frames")[k] == frames[k].filename);
    CHECK(util::read_binary(dir / frames[k].filename) == frames[k].png);
  }
}

TEST_CASE("prompt text") {
  CHECK(capacity_prompt().starts_with("Task: Answer the following questions based solely on the sequence of images"));
  CHECK(capacity_prompt().find("1. In which direction is the red ball moving?") != std::string::npos);
}

}
