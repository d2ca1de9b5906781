#pragma once

// Normalization of multiple-choice answers to canonical option strings.
//
// Only VLM answers to questions 6-10 are rewritten; open-text answers and all
// human answers pass through untouched. The extraction rules are versioned
// (kCurationRulesVersion) so a mismatch against a reference ledger can be
// traced to the rule set that produced it.

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vqalign/model.hpp"

namespace vqalign::curation {

inline constexpr std::string_view kCurationRulesVersion = "mc-rules/1";

enum class YesNo { Yes, No, NotRecognized };

// Case-insensitive single-token detection after stripping "Option:", "Answer:",
// brackets and quotes. Both or neither token present -> NotRecognized.
YesNo normalize_yes_no(std::string_view text);

// Closed integer interval; hi == kOpenEnded for "21+"-style options.
struct Interval {
  static constexpr long kOpenEnded = -1;
  long lo = 0;
  long hi = 0;

  bool open_ended() const { return hi == kOpenEnded; }
  bool contains(const Interval& other) const;
  friend bool operator==(const Interval&, const Interval&) = default;
};

// Parses an option label: "7", "2-3", "21+". Throws ValidationError otherwise.
Interval parse_option_interval(std::string_view option);

// Every numeric expression found in text, left to right. Comparatives become
// intervals ("more than 10" -> [11, open), "10 or more" -> [10, open)).
std::vector<Interval> extract_intervals(std::string_view text);

// The unique option whose interval fully contains the value stated in text, or
// nullopt (ignored) when nothing is stated, statements conflict, or no option
// contains it.
std::optional<std::string> match_interval(std::string_view text,
                                          std::span<const std::string> options);

// 1-10 rating; accepts "9", "Option: 9", "9/10", "9 out of 10".
std::optional<std::string> normalize_scale(std::string_view text);

struct SystemCurationStats {
  long modifications = 0;
  long ignored = 0;
  long total = 0;
  friend bool operator==(const SystemCurationStats&, const SystemCurationStats&) = default;
};

struct CurationStats {
  std::map<std::string, SystemCurationStats> per_system;

  SystemCurationStats totals() const;
  Json to_json() const;
  static CurationStats from_json(const Json& j);
};

struct CurationResult {
  std::vector<ResponseRecord> records;
  CurationStats stats;
};

// Outcome for a single answer, independent of any stored status.
struct Normalized {
  ResponseStatus status = ResponseStatus::Kept;
  std::optional<std::string> normalized_text;
};
Normalized normalize_answer(std::string_view text, const QuestionSpec& question);

// Records are re-derived from their original text, so curate is idempotent.
// Output order: sorted by (system, video, qid, repetition).
CurationResult curate(const std::vector<ResponseRecord>& records, const RunManifest& manifest);

}  // namespace vqalign::curation
