#pragma once

// Synthetic manifests, responses, clips and fixtures for tests.

#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "vqalign/config.hpp"
#include "vqalign/embedding.hpp"
#include "vqalign/harness.hpp"
#include "vqalign/model.hpp"

namespace testkit {

namespace fs = std::filesystem;
using namespace vqalign;

// Empty directory under the system temp dir, recreated on each call.
fs::path scratch(const std::string& name);

struct ManifestSpec {
  int humans = 2;
  std::vector<Provider> vlms{Provider::Pixtral};
  int videos = 2;
  fs::path frames_root;  // when set, clips point at <root>/<video_id>
  int repetitions = 0;   // 0 keeps the provider defaults
};

// All 15 questions; per-clip text for 1-5. Humans are human01.., VLMs are
// named after their provider.
RunManifest make_manifest(const ManifestSpec& spec);

// 50 small PNG frames per clip, each a different flat color with a moving bar.
void write_frame_dirs(const RunManifest& m, int width = 64, int height = 48);

// Valid answer for a question: an option for multiple choice, a sentence otherwise.
std::string synthetic_answer(const QuestionSpec& q, std::mt19937_64& rng);

// Humans answer once (repetition 0); VLMs answer every configured repetition,
// multiple-choice answers wrapped as "Option: X".
std::vector<ResponseRecord> make_responses(const RunManifest& m, std::mt19937_64& rng);

// Unit-norm random vector.
std::vector<double> random_unit(std::size_t d, std::mt19937_64& rng);

// One random vector per (system, cell).
embedding::EmbeddedAnswerSet random_set(const RunManifest& m, std::size_t d, std::mt19937_64& rng);

// Replay entries answering every job/repetition with reply(job, repetition).
std::vector<harness::ReplayEntry> replay_for(
    const std::vector<harness::QueryJob>& jobs,
    const std::function<std::string(const harness::QueryJob&, int)>& reply);

// Writes a run.toml in dir; extra lines are appended verbatim.
fs::path write_config(const fs::path& dir, const fs::path& manifest, const std::vector<fs::path>& responses,
                      const std::string& extra = "");

}  // namespace testkit
