#pragma once

// Two-component PCA of answer embeddings via a thin SVD of the centered data.

#include <array>
#include <string>
#include <vector>

#include "vqalign/embedding.hpp"
#include "vqalign/model.hpp"
#include "vqalign/rsa.hpp"

namespace vqalign::pca {

struct KeyedVector {
  std::string system_id;
  std::string video_id;
  int qid = 0;
  std::vector<double> values;
};

struct ProjectedPoint {
  std::string system_id;
  std::string video_id;
  int qid = 0;
  double x = 0.0;
  double y = 0.0;
};

struct PcaProjection {
  rsa::AnalysisBlock block = rsa::AnalysisBlock::All;
  std::vector<ProjectedPoint> coords;
  std::array<double, 2> explained_variance_ratio{0.0, 0.0};
  std::array<std::vector<double>, 2> component_axes;
  bool rank_deficient = false;  // rank < 2 after centering

  double ratio_sum() const { return explained_variance_ratio[0] + explained_variance_ratio[1]; }
};

// Needs at least 3 vectors of a common dimension >= 2. Each axis is signed so
// its largest-magnitude loading is positive.
PcaProjection pca_2d(const std::vector<KeyedVector>& vectors,
                     rsa::AnalysisBlock block = rsa::AnalysisBlock::All);

// Cell vectors of every system for questions in `block`, in manifest order.
std::vector<KeyedVector> collect_block(const embedding::EmbeddedAnswerSet& set,
                                       const RunManifest& manifest, rsa::AnalysisBlock block);

// key,x,y,kind where key is system_id/video_id/qid.
std::string to_csv(const PcaProjection& p, const RunManifest& manifest);
Json meta_json(const PcaProjection& p);

}  // namespace vqalign::pca
