#pragma once

// Distance-to-median analysis: for each (video, question) cell, the L2
// distance of every system's answer embedding to the componentwise median of
// all systems' embeddings in that cell.

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "vqalign/embedding.hpp"
#include "vqalign/model.hpp"

namespace vqalign::metric {

// Componentwise median, mean of the middle pair for even counts. Not re-normalized.
embedding::EmbeddingVector median_embedding(std::span<const embedding::EmbeddingVector> vectors);

// All: one median over every system in the cell. Group: separate medians for
// humans and VLMs (exploratory only).
enum class MedianScope { All, Group };
std::string_view to_string(MedianScope s);
MedianScope parse_median_scope(std::string_view s);

struct DistanceRow {
  std::string system_id;
  std::string video_id;
  int qid = 0;
  Block block = Block::Variable;
  SystemKind kind = SystemKind::Human;
  double distance = 0.0;
};

struct MedianDistanceTable {
  std::vector<DistanceRow> rows;
  embedding::PoolingMode pooling_mode = embedding::PoolingMode::Pooled;
  std::string model_id;
  MedianScope scope = MedianScope::All;
  std::vector<CellKey> skipped;  // cells where no system had a vector

  // header: system_id,video_id,qid,block,kind,distance
  std::string to_csv() const;
};

MedianDistanceTable distance_to_median(const embedding::EmbeddedAnswerSet& set,
                                       const RunManifest& manifest,
                                       MedianScope scope = MedianScope::All);

struct HistogramSpec {
  double lo = 0.0;
  double hi = 2.0;
  std::size_t bins = 40;
  std::vector<double> edges() const;
};

struct DistributionSummary {
  std::size_t count = 0;
  double mean = 0.0;
  double median = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
  std::vector<double> edges;
  std::vector<std::size_t> counts;  // values >= hi land in the last bin
  std::size_t above_range = 0;      // how many of those exceeded hi

  double iqr() const { return q3 - q1; }
  Json to_json() const;
};

// Throws ComputeError on an empty sample.
DistributionSummary summarize(std::span<const double> values, const HistogramSpec& spec);

using GroupKey = std::pair<SystemKind, Block>;

// One summary per (system kind, block). Throws ComputeError for an empty table.
std::map<GroupKey, DistributionSummary> summarize_distances(const MedianDistanceTable& table,
                                                            const HistogramSpec& spec);

}  // namespace vqalign::metric
