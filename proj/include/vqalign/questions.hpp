#pragma once

// Question sources: the fixed multiple-choice and counterfactual bank, and
// per-clip variable questions generated by an Oracle LLM from meta-tags.

#include <array>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "vqalign/harness.hpp"
#include "vqalign/model.hpp"

namespace vqalign::questions {

enum class LabelKind { Single, Multi, MultiOpen };

struct MetaAttribute {
  std::string key;           // snake_case JSON key
  std::string display_name;  // as annotated
  LabelKind kind = LabelKind::Single;
};

// The 16 annotation attributes in table order.
const std::vector<MetaAttribute>& meta_attributes();

struct MetaTagRecord {
  std::string video_id;
  // Single-label attributes hold exactly one value.
  std::map<std::string, std::vector<std::string>> values;
};

// Every attribute must appear exactly once; unknown keys are rejected.
MetaTagRecord parse_meta_tags(std::string_view json_text, std::string_view where);
MetaTagRecord load_meta_tags(const std::filesystem::path& path);
// Loads metadata/<video_id>.json for each id.
std::vector<MetaTagRecord> load_metadata_dir(const std::filesystem::path& dir,
                                             const std::vector<std::string>& video_ids);
Json to_json(const MetaTagRecord& r);

struct OraclePrompt {
  std::string system_instructions;
  std::string starter_message;
};

// Verbatim instructions and starter, with the samples (numbered from 1,
// "#" and "Name" first) in place of the insertion slot.
OraclePrompt build_oracle_prompt(const std::vector<MetaTagRecord>& records);

struct QAPair {
  std::string question;
  std::string answer;
};

struct OracleQA {
  int sample_number = 0;
  std::string video_id;
  std::array<QAPair, 5> pairs;
};

// Accepts "Q1:" and "**Q1:**" styles and ignores prose around sample blocks.
// Throws ParseError naming the sample when it does not hold exactly 5 pairs.
std::vector<OracleQA> parse_oracle_output(std::string_view text);
std::string render(const OracleQA& qa);
std::string render(const std::vector<OracleQA>& qas);

// Sends the prompt as a two-message chat and parses the reply.
std::vector<OracleQA> run_oracle(const std::vector<MetaTagRecord>& records,
                                 harness::Transport& transport, const std::string& model_name);

// Questions 6-15 with their answer formats.
const std::vector<QuestionSpec>& question_bank();
// Placeholders for 1-5 followed by the bank.
std::vector<QuestionSpec> full_question_set();

// Stores each sample's pairs as the clip's questions 1-5. Throws
// ValidationError for clips the manifest does not list.
void merge_into_manifest(RunManifest& manifest, const std::vector<OracleQA>& qas);

}  // namespace vqalign::questions
