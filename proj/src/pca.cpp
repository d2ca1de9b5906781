#include "vqalign/pca.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <cmath>
#include <sstream>

#include "vqalign/errors.hpp"
#include "vqalign/util.hpp"

namespace vqalign::pca {

PcaProjection pca_2d(const std::vector<KeyedVector>& vectors, rsa::AnalysisBlock block) {
  if (vectors.size() < 3)
    throw ComputeError("pca needs at least 3 vectors (got " + std::to_string(vectors.size()) + ")");
  const auto n = static_cast<Eigen::Index>(vectors.size());
  const auto d = static_cast<Eigen::Index>(vectors.front().values.size());
  if (d < 2) throw ComputeError("pca needs dimension >= 2");

  Eigen::MatrixXd x(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& v = vectors[static_cast<std::size_t>(i)].values;
    if (static_cast<Eigen::Index>(v.size()) != d) throw ComputeError("pca: dimension mismatch");
    x.row(i) = Eigen::Map<const Eigen::RowVectorXd>(v.data(), d);
  }
  x.rowwise() -= x.colwise().mean();

  Eigen::BDCSVD<Eigen::MatrixXd> svd(x, Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  Eigen::MatrixXd v = svd.matrixV();

  PcaProjection out;
  out.block = block;
  const double total = sv.squaredNorm();
  const double s0 = sv.size() > 0 ? sv(0) : 0.0;
  const double s1 = sv.size() > 1 ? sv(1) : 0.0;
  if (total <= 0.0) throw ComputeError("pca: all vectors identical");
  out.rank_deficient = s1 <= 1e-12 * s0;
  out.explained_variance_ratio = {s0 * s0 / total, out.rank_deficient ? 0.0 : s1 * s1 / total};

  for (int k = 0; k < 2; ++k) {
    Eigen::VectorXd axis = v.cols() > k ? Eigen::VectorXd(v.col(k)) : Eigen::VectorXd::Zero(d);
    Eigen::Index arg = 0;
    axis.cwiseAbs().maxCoeff(&arg);
    if (axis(arg) < 0) axis = -axis;
    out.component_axes[k].assign(axis.data(), axis.data() + d);
    v.col(k) = axis;
  }

  const Eigen::MatrixXd proj = x * v.leftCols(2);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& kv = vectors[static_cast<std::size_t>(i)];
    out.coords.push_back({kv.system_id, kv.video_id, kv.qid, proj(i, 0),
                          out.rank_deficient ? 0.0 : proj(i, 1)});
  }
  return out;
}

std::vector<KeyedVector> collect_block(const embedding::EmbeddedAnswerSet& set,
                                       const RunManifest& manifest, rsa::AnalysisBlock block) {
  std::vector<KeyedVector> out;
  for (const auto& s : manifest.systems) {
    for (const auto& cell : manifest.cells()) {
      if (block != rsa::AnalysisBlock::All && rsa::from_block(block_of_qid(cell.qid)) != block)
        continue;
      if (const auto* v = set.find(s.id, cell.video_id, cell.qid))
        out.push_back({s.id, cell.video_id, cell.qid, v->values});
    }
  }
  return out;
}

std::string to_csv(const PcaProjection& p, const RunManifest& manifest) {
  std::ostringstream out;
  out << "key,x,y,kind\n";
  for (const auto& c : p.coords) {
    const auto* s = manifest.find_system(c.system_id);
    out << c.system_id << '/' << c.video_id << '/' << c.qid << ',' << util::format_double(c.x)
        << ',' << util::format_double(c.y) << ','
        << (s ? std::string(to_string(s->kind)) : std::string("unknown")) << '\n';
  }
  return out.str();
}

Json meta_json(const PcaProjection& p) {
  return {{"block", rsa::to_string(p.block)},
          {"explained_variance_ratio",
           {p.explained_variance_ratio[0], p.explained_variance_ratio[1]}},
          {"ratio_sum", p.ratio_sum()},
          {"rank_deficient", p.rank_deficient},
          {"points", p.coords.size()}};
}

}  // namespace vqalign::pca
