#pragma once

// Canonical data model shared by every stage: systems, clips, questions and
// the free-text responses keyed by (system, video, question, repetition).
//
// On disk a run is a single JSON manifest plus line-delimited JSON response
// files. Serialization is canonical (sorted keys, fixed indentation) so that
// serialize(parse(x)) == x for any file this module wrote.

#include <compare>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace vqalign {

using Json = nlohmann::json;

enum class SystemKind { Human, Vlm };
enum class Provider { DeepSeek, Pixtral, Qwen2, CogVlm, Gemini, Llama, GenericHttp };
enum class Access { DirectApi, Replicate, Vertex };
enum class InputModality { ImagesText, VideoText };
enum class Block { Variable, MultipleChoice, Counterfactual };
enum class AnswerFormat { OpenText, YesNo, Scale1To10, CountInterval };
enum class ResponseStatus { Raw, Kept, Modified, Ignored };

std::string_view to_string(SystemKind v);
std::string_view to_string(Provider v);
std::string_view to_string(Access v);
std::string_view to_string(InputModality v);
std::string_view to_string(Block v);
std::string_view to_string(AnswerFormat v);
std::string_view to_string(ResponseStatus v);

SystemKind parse_system_kind(std::string_view s);
Provider parse_provider(std::string_view s);
Access parse_access(std::string_view s);
InputModality parse_input_modality(std::string_view s);
Block parse_block(std::string_view s);
AnswerFormat parse_answer_format(std::string_view s);
ResponseStatus parse_response_status(std::string_view s);

// Frame rates are exact rationals so 0.5 fps survives arithmetic unchanged.
struct Rational {
  std::int64_t num = 1;
  std::int64_t den = 1;

  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  // Best approximation with denominator <= 1000; throws ValidationError if v <= 0.
  static Rational from_double(double v);
  friend bool operator==(const Rational& a, const Rational& b) {
    return a.num * b.den == b.num * a.den;
  }
};

struct ProviderConfig {
  Provider provider = Provider::GenericHttp;
  std::string model_name;
  Access access = Access::DirectApi;
  Rational frame_rate_fps;
  InputModality input_modality = InputModality::ImagesText;
  int max_tokens = 512;
  double temperature = 1.0;
  double top_p = 0.9;
  int repetitions = 1;

  friend bool operator==(const ProviderConfig&, const ProviderConfig&) = default;
};

struct SystemProfile {
  std::string id;
  SystemKind kind = SystemKind::Human;
  std::string display_name;
  std::optional<ProviderConfig> provider_config;  // present iff kind == Vlm
  bool anonymized = false;                        // humans only

  friend bool operator==(const SystemProfile&, const SystemProfile&) = default;
};

struct VideoClipRef {
  std::string id;
  int frame_count = 50;
  int native_fps = 10;
  double duration_s = 5.0;
  std::string source_path_or_uri;
  std::optional<std::string> city;

  friend bool operator==(const VideoClipRef&, const VideoClipRef&) = default;
};

struct QuestionSpec {
  int qid = 0;
  Block block = Block::Variable;
  std::string text;
  AnswerFormat answer_format = AnswerFormat::OpenText;
  std::optional<std::vector<std::string>> allowed_options;

  friend bool operator==(const QuestionSpec&, const QuestionSpec&) = default;
};

// Per-clip text for the Oracle-generated questions 1-5. The reference answer
// is kept for inspection only; the Oracle is not a responding system.
struct VariableQuestion {
  std::string video_id;
  int qid = 0;
  std::string text;
  std::optional<std::string> reference_answer;

  friend bool operator==(const VariableQuestion&, const VariableQuestion&) = default;
};

struct ResponseRecord {
  std::string system_id;
  std::string video_id;
  int qid = 0;
  int repetition = 0;
  std::string text;
  ResponseStatus status = ResponseStatus::Raw;
  std::optional<std::string> normalized_text;
  std::string timestamp;

  // Text that downstream analysis should embed.
  const std::string& effective_text() const {
    return normalized_text ? *normalized_text : text;
  }

  friend bool operator==(const ResponseRecord&, const ResponseRecord&) = default;
};

struct ResponseKey {
  std::string system_id;
  std::string video_id;
  int qid = 0;
  int repetition = 0;

  friend auto operator<=>(const ResponseKey&, const ResponseKey&) = default;
};

inline ResponseKey key_of(const ResponseRecord& r) {
  return {r.system_id, r.video_id, r.qid, r.repetition};
}

// One (video, question) stimulus. Analysis indices are ordered lists of these.
struct CellKey {
  std::string video_id;
  int qid = 0;

  friend auto operator<=>(const CellKey&, const CellKey&) = default;
};

struct RunManifest {
  std::vector<SystemProfile> systems;
  std::vector<VideoClipRef> videos;
  std::vector<QuestionSpec> questions;
  std::vector<VariableQuestion> variable_questions;

  const SystemProfile* find_system(std::string_view id) const;
  const VideoClipRef* find_video(std::string_view id) const;
  const QuestionSpec* find_question(int qid) const;

  // Question text as posed for one clip (per-clip text for qids 1-5 when known).
  std::string question_text(std::string_view video_id, int qid) const;

  // Every (video, qid) pair in manifest order: videos outer, qids ascending.
  std::vector<CellKey> cells() const;

  friend bool operator==(const RunManifest&, const RunManifest&) = default;
};

// Block membership is fixed by question number.
Block block_of_qid(int qid);

// Allowed options for the fixed-format questions.
const std::vector<std::string>& pedestrian_count_options();
const std::vector<std::string>& yes_no_options();
const std::vector<std::string>& scale_options();

// Options a multiple-choice question accepts, falling back to the canonical set
// for its format when the manifest leaves allowed_options out.
std::vector<std::string> options_for(const QuestionSpec& q);

// Throws ValidationError when the qid/block/format mapping is violated.
void validate_question(const QuestionSpec& q);
// Full manifest check; throws ValidationError naming the record and field.
void validate_manifest(const RunManifest& m);

Json to_json(const ProviderConfig& v);
Json to_json(const SystemProfile& v);
Json to_json(const VideoClipRef& v);
Json to_json(const QuestionSpec& v);
Json to_json(const VariableQuestion& v);
Json to_json(const ResponseRecord& v);
Json to_json(const RunManifest& v);

ProviderConfig provider_config_from_json(const Json& j, std::string_view where);
SystemProfile system_from_json(const Json& j, std::string_view where);
VideoClipRef video_from_json(const Json& j, std::string_view where);
QuestionSpec question_from_json(const Json& j, std::string_view where);
ResponseRecord response_from_json(const Json& j, std::string_view where);

RunManifest parse_manifest(std::string_view text);
std::string serialize_manifest(const RunManifest& m);
RunManifest load_run_manifest(const std::filesystem::path& path);
void save_run_manifest(const RunManifest& m, const std::filesystem::path& path);

std::vector<ResponseRecord> parse_responses(std::string_view jsonl);
std::string serialize_responses(const std::vector<ResponseRecord>& records);
std::vector<ResponseRecord> load_responses(const std::filesystem::path& path);
void save_responses(const std::vector<ResponseRecord>& records, const std::filesystem::path& path);

struct ValidationReport {
  struct MissingCell {
    std::string system_id;
    std::string video_id;
    int qid = 0;
  };
  std::vector<MissingCell> missing;
  std::vector<ResponseKey> duplicates;
  std::vector<std::string> unknown_ids;  // "system:<id>", "video:<id>", "qid:<n>"
  std::vector<std::string> invariant_violations;

  bool ok() const {
    return missing.empty() && duplicates.empty() && unknown_ids.empty() &&
           invariant_violations.empty();
  }
  Json to_json() const;
};

// Report-only: never throws on bad records.
ValidationReport validate_responses(const std::vector<ResponseRecord>& records,
                                    const RunManifest& manifest);

}  // namespace vqalign
