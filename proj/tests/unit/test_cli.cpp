#include <array>
#include <cstdio>
#include <fstream>
#include <sys/wait.h>

#include "builders.hpp"
#include "doctest.h"
#include "vqalign/harness.hpp"
#include "vqalign/util.hpp"

using namespace vqalign;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code = -1;
  std::string out;
};

Outcome run(const std::string& tool, const std::string& args) {
  const std::string cmd = std::string(VQALIGN_TOOLS_DIR) + "/" + tool + " " + args + " 2>&1";
  Outcome o;
  FILE* p = popen(cmd.c_str(), "r");
  REQUIRE(p);
  std::array<char, 4096> buf{};
  while (auto n = std::fread(buf.data(), 1, buf.size(), p)) o.out.append(buf.data(), n);
  const int status = pclose(p);
  o.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return o;
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("usage errors exit with 2") {
  CHECK(run("vqalign", "").code == 2);
  CHECK(run("vqalign", "rsa").code == 2);
  CHECK(run("harness", "run --provider pixtral").code == 2);
  CHECK(run("capacity", "run --provider pixtral --transport carrier-pigeon").code == 2);
  CHECK(run("vqalign", "--help").code == 0);
}

TEST_CASE("vqalign stages and exit codes") {
  const auto dir = testkit::scratch("cli-stages");
  const auto m = testkit::make_manifest({2, {Provider::Pixtral}, 2, {}, 2});
  std::mt19937_64 rng(3);
  save_run_manifest(m, dir / "manifest.json");
  save_responses(testkit::make_responses(m, rng), dir / "responses.jsonl");
  const auto cfg = testkit::write_config(dir, "manifest.json", {"responses.jsonl"},
                                         "[embedding]\nbackend = \"hash\"\ndimension = 16\n");

  auto o = run("vqalign", "rsa --config " + q(cfg));
  CHECK(o.code == 3);
  CHECK(o.out.find("error [ingest]") != std::string::npos);

  o = run("vqalign", "all --config " + q(cfg));
  CHECK(o.code == 0);
  CHECK(o.out.find("report: ") != std::string::npos);
  CHECK(fs::exists(dir / "out/report/report.json"));
  o = run("vqalign", "rsa --config " + q(cfg));
  CHECK(o.code == 0);
  CHECK(o.out == "rsa: up to date\n");

  CHECK(run("vqalign", "ingest --config " + q(dir / "absent.toml")).code == 2);
  std::ofstream(dir / "bad.toml") << "manifest = \"manifest.json\"\nbogus = 1\n";
  o = run("vqalign", "ingest --config " + q(dir / "bad.toml"));
  CHECK(o.code == 2);
  CHECK(o.out.find("bogus: unknown key") != std::string::npos);
}

TEST_CASE("question commands") {
  auto o = run("vqalign", "questions bank");
  REQUIRE(o.code == 0);
  const auto bank = Json::parse(o.out);
  CHECK(bank.size() == 10);
  CHECK(bank[0].at("qid") == 6);

  const auto dir = testkit::scratch("cli-questions");
  save_run_manifest(testkit::make_manifest({}), dir / "manifest.json");
  std::ofstream(dir / "reply.txt") << "Sample #: 1\nName: clip02\nQ1: a?\nA1: b\nQ2: c?\nA2: d\nQ3: e?\nA3: f\n"
                                      "Q4: g?\nA4: h\nQ5: i?\nA5: j\n";
  o = run("vqalign", "questions parse --manifest " + q(dir / "manifest.json") + " --input " + q(dir / "reply.txt") +
                         " --out " + q(dir / "merged.json"));
  CHECK(o.code == 0);
  CHECK(load_run_manifest(dir / "merged.json").question_text("clip02", 3) == "e?");

  std::ofstream(dir / "short.txt") << "Sample #: 1\nName: clip02\nQ1: a?\nA1: b\n";
  CHECK(run("vqalign", "questions parse --manifest " + q(dir / "manifest.json") + " --input " +
                           q(dir / "short.txt")).code == 2);
  CHECK(run("vqalign", "questions prompt --manifest " + q(dir / "manifest.json") + " --metadata " +
                           q(dir / "nometa")).code == 2);
}

TEST_CASE("harness replay run") {
  const auto dir = testkit::scratch("cli-harness");
  auto m = testkit::make_manifest({1, {Provider::Pixtral, Provider::Gemini}, 1, dir / "frames", 2});
  testkit::write_frame_dirs(m);
  save_run_manifest(m, dir / "manifest.json");
  const auto jobs = harness::plan_jobs(m, "pixtral");
  const auto entries = testkit::replay_for(jobs, [](const harness::QueryJob& j, int rep) {
    return "answer " + std::to_string(j.qid) + "/" + std::to_string(rep);
  });
  {
    std::ofstream f(dir / "fixture.jsonl");
    for (const auto& e : entries) f << harness::to_json(e).dump() << "\n";
  }
  auto o = run("harness", "run --manifest " + q(dir / "manifest.json") + " --provider pixtral --transport replay" +
                              " --fixture " + q(dir / "fixture.jsonl") + " --out " + q(dir / "pixtral.jsonl"));
  CHECK(o.code == 0);
  CHECK(o.out.starts_with("30 response(s), 0 error row(s)"));
  const auto records = load_responses(dir / "pixtral.jsonl");
  REQUIRE(records.size() == 30);
  CHECK(records[0].system_id == "pixtral");
  CHECK(fs::exists(dir / "pixtral.jsonl.errors.jsonl"));

  o = run("harness", "run --manifest " + q(dir / "manifest.json") + " --provider gemini --transport replay" +
                         " --fixture " + q(dir / "fixture.jsonl") + " --out " + q(dir / "gemini.jsonl"));
  CHECK(o.code == 0);
  CHECK(o.out.starts_with("0 response(s), 30 error row(s)"));

  CHECK(run("harness", "run --manifest " + q(dir / "manifest.json") + " --provider llama --transport replay" +
                           " --fixture " + q(dir / "fixture.jsonl")).code == 2);
  CHECK(run("harness", "run --manifest " + q(dir / "manifest.json") + " --provider pixtral --transport replay").code == 2);
  ::unsetenv("VQALIGN_PIXTRAL_ENDPOINT");
  CHECK(run("harness", "run --manifest " + q(dir / "manifest.json") + " --provider pixtral --transport live --out " +
                           q(dir / "live.jsonl")).code == 3);
}

TEST_CASE("capacity probe with the grading fixture") {
  const auto dir = testkit::scratch("cli-capacity");
  const std::string fixture = q(fs::path(VQALIGN_FIXTURES) / "capacity_grading.json");
  auto o = run("capacity", "run --provider pixtral --fixture " + fixture + " --out " + q(dir) + " --write-frames");
  CHECK(o.code == 0);
  CHECK(o.out == "pixtral @ 1 fps, 5 frames: passed\n");
  const auto report = Json::parse(util::read_file(dir / "capacity_report.json"));
  CHECK(report.at("iterations").size() == 5);
  CHECK(fs::exists(dir / "star_0/case.json"));

  o = run("capacity", "run --provider pixtral --fps 10 --fixture " + fixture + " --out " + q(dir));
  CHECK(o.code == 0);
  CHECK(o.out == "pixtral @ 10 fps, 50 frames: failed\n");
  o = run("capacity", "run --provider llama --fixture " + fixture + " --out " + q(dir));
  CHECK(o.out == "llama @ 0.5 fps, 3 frames: passed\n");
  CHECK(run("capacity", "run --provider pixtral --out " + q(dir)).code == 2);
}

}
