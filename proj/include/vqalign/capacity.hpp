#pragma once

// Frame-processing probe: a red ball moving bottom-left to top-right across
// N frames, with a green star drawn into exactly one of them. A model passes
// an iteration when it reports the direction and notices the star.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <regex>
#include <string>
#include <vector>

#include "vqalign/harness.hpp"
#include "vqalign/model.hpp"

namespace vqalign::capacity {

struct FrameSize {
  int width = 512;
  int height = 512;
};

struct RenderParams {
  int ball_radius = 24;
  int star_box = 48;
  int margin = 16;
};

struct Point {
  int x = 0;
  int y = 0;
  friend bool operator==(const Point&, const Point&) = default;
};

struct CapacityCase {
  int num_frames = 0;
  int star_frame_index = 0;
  FrameSize frame_size;
  std::vector<Point> ball_positions;  // ball centers, screen coordinates
  Point star_center;
};

struct GeneratedFrame {
  std::string filename;  // opaque: hash of the image bytes
  std::vector<std::uint8_t> png;
};

// Throws ValidationError for num_frames < 2, a star index out of range, or a
// frame too small for the ball to advance every frame.
std::pair<CapacityCase, std::vector<GeneratedFrame>> generate_case(int num_frames,
                                                                   int star_frame_index,
                                                                   FrameSize size = {},
                                                                   const RenderParams& params = {});

// Decoded 8-bit BGR pixels, row-major.
struct Bitmap {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> bgr;
  const std::uint8_t* at(int x, int y) const { return &bgr[(static_cast<std::size_t>(y) * width + x) * 3]; }
};
Bitmap decode_png(std::span<const std::uint8_t> png);

const std::string& capacity_prompt();

// Regular expressions matched against lowercased text with hyphens turned
// into spaces.
struct Lexicon {
  std::vector<std::string> toward_top_right;
  std::vector<std::string> reversed;
  std::vector<std::string> star_terms;
  std::vector<std::string> negators;  // whole words
  int negation_window = 4;            // words before a match
};
const Lexicon& default_lexicon();
Lexicon lexicon_from_json(const Json& j);

struct Grade {
  bool direction_ok = false;
  bool star_detected = false;
  bool passed() const { return direction_ok && star_detected; }
};

Grade grade_response(std::string_view text, const CapacityCase& c,
                     const Lexicon& lexicon = default_lexicon());

// Frames a provider sees for a clip of `seconds`: round(seconds * fps), at least 2.
int frames_for(Rational fps, double seconds = 5.0);

// Star positions for `iterations` runs over n frames, spread from first to last.
std::vector<int> star_schedule(int num_frames, int iterations);

struct IterationResult {
  int star_frame_index = 0;
  bool payload_ok = true;
  std::string error;
  std::string response_text;
  Grade grade;
  bool passed() const { return payload_ok && error.empty() && grade.passed(); }
};

struct CapacityReport {
  std::string provider;
  std::string model_name;
  Rational fps;
  int num_frames = 0;
  std::vector<IterationResult> iterations;
  bool passed() const;
  Json to_json() const;
};

// Answers one probe request. Receives the case so offline responders can key on it.
using Responder = std::function<harness::TransportReply(const harness::ProviderRequest&,
                                                        const CapacityCase&)>;
Responder responder_from(harness::Transport& transport);

// Canned per-provider answers: {"responses": [{"provider", "fps", "text",
// optional "star_frame_index"}]}. Entries with an index take precedence.
class GradingFixture {
 public:
  explicit GradingFixture(const Json& j);
  static GradingFixture load(const std::filesystem::path& path);
  Responder responder() const;

 private:
  struct Entry {
    std::string provider;
    Rational fps;
    std::optional<int> star_frame_index;
    std::string text;
  };
  std::vector<Entry> entries_;
};

struct CapacityOptions {
  int num_frames = 0;  // 0: frames_for(config.frame_rate_fps)
  int iterations = 5;
  FrameSize frame_size;
  RenderParams render;
  Lexicon lexicon = default_lexicon();
};

// Payload errors (frame caps) fail the iteration without calling the responder.
CapacityReport run_capacity(const ProviderConfig& config, const Responder& responder,
                            const CapacityOptions& options = {});

// Writes the frames under their opaque names plus case.json with the order.
void write_case(const std::filesystem::path& dir, const CapacityCase& c,
                const std::vector<GeneratedFrame>& frames);

}  // namespace vqalign::capacity
