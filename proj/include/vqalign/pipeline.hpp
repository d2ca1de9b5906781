#pragma once

// Staged analysis run. Each stage reads its upstream artifacts from the output
// directory, writes its own, and records a stamp with the hash of everything
// it consumed; a stage whose stamp still matches is skipped.
//
//   ingest  -> ingest/manifest.json, ingest/responses.jsonl, ingest/validation_report.json
//   curate  -> curate/responses.curated.jsonl, curate/curation_stats.json
//   embed   -> embed/embeddings.jsonl
//   rsa     -> rsa/M_<block>.{json,csv}, rsa/gramians_<block>.json
//   metric  -> metric/distances.csv, metric/distance_summary.json
//   pca     -> pca/pca_block{1,2,3}.csv, pca/pca_meta.json
//   report  -> report/report.json
// plus run_metadata.json at the top level.

#include <filesystem>
#include <string>
#include <vector>

#include "vqalign/config.hpp"

namespace vqalign::pipeline {

enum class Stage { Ingest, Curate, Embed, Rsa, Metric, Pca, Report };
std::string_view to_string(Stage s);
Stage parse_stage(std::string_view s);
const std::vector<Stage>& all_stages();

struct StageResult {
  Stage stage = Stage::Ingest;
  bool skipped = false;  // stamp matched; nothing rewritten
  std::vector<std::filesystem::path> written;
};

// Throws DependencyError naming the missing upstream stage.
StageResult run_stage(Stage stage, const RunConfig& config);
std::vector<StageResult> run_all(const RunConfig& config);

// Exit status for an exception escaping a stage: 2 validation/config/parse,
// 3 dependency or unreachable backend, 1 anything else.
int exit_code_for(const std::exception& e);

// Block file suffix: variable -> 1, multiple_choice -> 2, counterfactual -> 3.
int block_number(rsa::AnalysisBlock b);

}  // namespace vqalign::pipeline
