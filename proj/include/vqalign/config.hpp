#pragma once

// Run configuration, read from a TOML file:
//
//   manifest = "manifest.json"
//   responses = ["responses/humans.jsonl", "responses/vlms.jsonl"]
//   output_dir = "out"
//   seed = 0
//
//   [embedding]
//   model_id = "all-mpnet-base-v2"
//   backend = "fixture"            # hash | fixture | http
//   fixture = "embeddings.fixture.jsonl"
//   endpoint = "http://127.0.0.1:8765/embed"
//   unit_norm = true
//
//   [analysis]
//   pooling_mode = "pooled"        # pooled | single
//   blocks = ["variable", "multiple_choice", "counterfactual"]
//   histogram_bins = 40
//
// Relative paths resolve against the config file's directory.

#include <filesystem>
#include <string>
#include <vector>

#include "vqalign/embedding.hpp"
#include "vqalign/metric.hpp"
#include "vqalign/rsa.hpp"

namespace vqalign {

struct RunConfig {
  std::filesystem::path manifest;
  std::vector<std::filesystem::path> responses;
  std::filesystem::path output_dir;
  std::uint64_t seed = 0;

  std::string model_id = "all-mpnet-base-v2";
  embedding::BackendConfig backend;
  bool unit_norm = true;

  embedding::PoolingMode pooling_mode = embedding::PoolingMode::Pooled;
  std::vector<rsa::AnalysisBlock> blocks{rsa::AnalysisBlock::Variable,
                                         rsa::AnalysisBlock::MultipleChoice,
                                         rsa::AnalysisBlock::Counterfactual};
  metric::HistogramSpec histogram;
  metric::MedianScope median_scope = metric::MedianScope::All;

  // Canonical (key-sorted) JSON of the parsed file; hashing it gives a value
  // that does not depend on key order or formatting.
  Json canonical;
  std::string hash() const;
};

// Throws ConfigError for unknown keys, wrong types or bad enum values.
RunConfig parse_run_config(std::string_view toml_text, const std::filesystem::path& base_dir);
RunConfig load_run_config(const std::filesystem::path& path);

}  // namespace vqalign
