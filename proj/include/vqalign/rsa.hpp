#pragma once

// Representational similarity analysis over answer embeddings.
//
// Each system gets an N x N Gramian of inner products between its answers to a
// shared, ordered list of (video, question) stimuli. Systems are then compared
// by the Pearson correlation of the strict upper triangles of their Gramians,
// giving the cross-system matrix M.

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vqalign/embedding.hpp"
#include "vqalign/kernels.hpp"
#include "vqalign/model.hpp"

namespace vqalign::rsa {

enum class AnalysisBlock { All, Variable, MultipleChoice, Counterfactual };
std::string_view to_string(AnalysisBlock b);
AnalysisBlock parse_analysis_block(std::string_view s);
AnalysisBlock from_block(Block b);

struct SystemGramian {
  std::string system_id;
  std::vector<CellKey> indices;
  kernels::Matrix matrix;
};

struct SimilarityMatrix {
  std::vector<std::string> system_ids;
  // Row-major, size() x size(); nullopt marks an undefined correlation
  // (a Gramian triangle with zero variance).
  std::vector<std::optional<double>> entries;
  AnalysisBlock block = AnalysisBlock::All;

  std::size_t size() const { return system_ids.size(); }
  const std::optional<double>& at(std::size_t a, std::size_t b) const {
    return entries[a * size() + b];
  }
  std::optional<std::size_t> index_of(std::string_view id) const;
};

// Throws ComputeError naming the first (system, video, qid) without a vector.
SystemGramian build_gramian(const embedding::EmbeddedAnswerSet& set, const std::string& system_id,
                            std::span<const CellKey> indices);

// Strictly-above-diagonal entries, row-major. Throws for N < 2.
std::vector<double> upper_triangle(const SystemGramian& g);

// Sample Pearson coefficient; nullopt when either input has zero variance.
// Throws ComputeError on length mismatch or fewer than two observations.
std::optional<double> pearson(std::span<const double> x, std::span<const double> y);

// Throws ComputeError when the Gramians are not over the same ordered indices.
SimilarityMatrix build_similarity_matrix(std::span<const SystemGramian> gramians,
                                         AnalysisBlock block);

// qid 1-5 -> variable, 6-10 -> multiple_choice, 11-15 -> counterfactual.
// Throws ValidationError for a qid without a question or outside 1-15.
std::map<Block, std::vector<CellKey>> partition_by_block(std::span<const CellKey> indices,
                                                         std::span<const QuestionSpec> questions);

struct AlignedIndices {
  std::vector<CellKey> indices;
  std::vector<CellKey> dropped;  // missing for at least one system
};

// Keeps only the candidates every listed system has a vector for.
AlignedIndices align_indices(const embedding::EmbeddedAnswerSet& set,
                             std::span<const std::string> system_ids,
                             std::span<const CellKey> candidates);

// Symmetry, unit diagonal and [-1, 1] bounds; returns human-readable violations.
std::vector<std::string> check_invariants(const SimilarityMatrix& m);

// Mean off-diagonal correlation within and across the human / VLM groups.
struct GroupMeans {
  std::optional<double> human_human;
  std::optional<double> human_vlm;
  std::optional<double> vlm_vlm;
};
GroupMeans group_means(const SimilarityMatrix& m, const RunManifest& manifest);

// Humans first, then VLMs, each group alphabetical by id.
std::vector<std::string> heatmap_order(std::span<const std::string> ids, const RunManifest& manifest);

Json to_json(const SimilarityMatrix& m);
SimilarityMatrix similarity_from_json(const Json& j);
Json to_json(const SystemGramian& g);
std::string to_csv(const SimilarityMatrix& m, std::span<const std::string> order);

struct BlockAnalysis {
  AnalysisBlock block = AnalysisBlock::All;
  AlignedIndices indices;
  std::vector<SystemGramian> gramians;
  SimilarityMatrix similarity;
};

// Aligns indices across every system in the set and builds Gramians and M for
// the requested block.
BlockAnalysis analyze_block(const embedding::EmbeddedAnswerSet& set, const RunManifest& manifest,
                            AnalysisBlock block);

}  // namespace vqalign::rsa
