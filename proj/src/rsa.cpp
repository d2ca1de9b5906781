#include "vqalign/rsa.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "vqalign/errors.hpp"
#include "vqalign/util.hpp"

namespace vqalign::rsa {

std::string_view to_string(AnalysisBlock b) {
  switch (b) {
    case AnalysisBlock::All: return "all";
    case AnalysisBlock::Variable: return "variable";
    case AnalysisBlock::MultipleChoice: return "multiple_choice";
    case AnalysisBlock::Counterfactual: return "counterfactual";
  }
  return "?";
}

AnalysisBlock parse_analysis_block(std::string_view s) {
  if (s == "all") return AnalysisBlock::All;
  return from_block(parse_block(s));
}

AnalysisBlock from_block(Block b) {
  switch (b) {
    case Block::Variable: return AnalysisBlock::Variable;
    case Block::MultipleChoice: return AnalysisBlock::MultipleChoice;
    case Block::Counterfactual: return AnalysisBlock::Counterfactual;
  }
  return AnalysisBlock::All;
}

std::optional<std::size_t> SimilarityMatrix::index_of(std::string_view id) const {
  for (std::size_t i = 0; i < system_ids.size(); ++i)
    if (system_ids[i] == id) return i;
  return std::nullopt;
}

SystemGramian build_gramian(const embedding::EmbeddedAnswerSet& set, const std::string& system_id,
                            std::span<const CellKey> indices) {
  kernels::Matrix x(indices.size(), set.dimension);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const auto* v = set.find(system_id, indices[i].video_id, indices[i].qid);
    if (!v)
      throw ComputeError("no embedding for system '" + system_id + "', video '" +
                         indices[i].video_id + "', qid " + std::to_string(indices[i].qid));
    if (x.cols == 0) x = kernels::Matrix(indices.size(), v->dim());
    if (v->dim() != x.cols) throw ComputeError("embedding dimension mismatch in " + system_id);
    std::copy(v->values.begin(), v->values.end(), x.row(i).begin());
  }
  return {system_id, {indices.begin(), indices.end()}, kernels::parallel::gramian(x)};
}

std::vector<double> upper_triangle(const SystemGramian& g) {
  const std::size_t n = g.matrix.rows;
  if (n < 2) throw ComputeError("upper triangle needs N >= 2 (got " + std::to_string(n) + ")");
  std::vector<double> out;
  out.reserve(n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) out.push_back(g.matrix(i, j));
  return out;
}

std::optional<double> pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size())
    throw ComputeError("pearson: length mismatch (" + std::to_string(x.size()) + " vs " +
                       std::to_string(y.size()) + ")");
  if (x.size() < 2) throw ComputeError("pearson: need at least two observations");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (kernels::negligible_spread(sxx, x) || kernels::negligible_spread(syy, y)) return std::nullopt;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

SimilarityMatrix build_similarity_matrix(std::span<const SystemGramian> gramians,
                                         AnalysisBlock block) {
  SimilarityMatrix m;
  m.block = block;
  const std::size_t count = gramians.size();
  for (const auto& g : gramians) m.system_ids.push_back(g.system_id);
  if (count == 0) return m;
  for (const auto& g : gramians) {
    if (g.indices != gramians.front().indices)
      throw ComputeError("alignment error: Gramian of '" + g.system_id +
                         "' is over a different index list than '" + gramians.front().system_id +
                         "'");
  }
  m.entries.assign(count * count, std::nullopt);
  if (count == 1) {
    m.entries[0] = 1.0;
    return m;
  }

  const std::size_t len = gramians.front().matrix.rows * (gramians.front().matrix.rows - 1) / 2;
  kernels::Matrix tri(count, len);
  for (std::size_t a = 0; a < count; ++a) {
    const auto t = upper_triangle(gramians[a]);
    std::copy(t.begin(), t.end(), tri.row(a).begin());
  }
  if (len < 2) throw ComputeError("similarity matrix needs N >= 3 stimuli for a defined correlation");
  const auto corr = kernels::parallel::row_correlations(tri);
  for (std::size_t a = 0; a < count; ++a) {
    for (std::size_t b = 0; b < count; ++b) {
      if (a == b) {
        m.entries[a * count + b] = 1.0;
      } else if (!std::isnan(corr(a, b))) {
        m.entries[a * count + b] = corr(a, b);
      }
    }
  }
  return m;
}

std::map<Block, std::vector<CellKey>> partition_by_block(std::span<const CellKey> indices,
                                                         std::span<const QuestionSpec> questions) {
  std::map<Block, std::vector<CellKey>> out;
  for (const auto& c : indices) {
    const auto q = std::find_if(questions.begin(), questions.end(),
                                [&](const QuestionSpec& s) { return s.qid == c.qid; });
    if (q == questions.end())
      throw ValidationError("qid " + std::to_string(c.qid) + " has no question");
    out[block_of_qid(c.qid)].push_back(c);
  }
  return out;
}

AlignedIndices align_indices(const embedding::EmbeddedAnswerSet& set,
                             std::span<const std::string> system_ids,
                             std::span<const CellKey> candidates) {
  AlignedIndices out;
  for (const auto& c : candidates) {
    const bool everywhere = std::all_of(system_ids.begin(), system_ids.end(), [&](const auto& id) {
      return set.find(id, c.video_id, c.qid) != nullptr;
    });
    (everywhere ? out.indices : out.dropped).push_back(c);
  }
  return out;
}

std::vector<std::string> check_invariants(const SimilarityMatrix& m) {
  std::vector<std::string> problems;
  const std::size_t n = m.size();
  if (m.entries.size() != n * n) {
    problems.push_back("matrix has " + std::to_string(m.entries.size()) + " entries for " +
                       std::to_string(n) + " systems");
    return problems;
  }
  for (std::size_t a = 0; a < n; ++a) {
    if (!m.at(a, a) || *m.at(a, a) != 1.0)
      problems.push_back("diagonal entry for " + m.system_ids[a] + " is not exactly 1");
    for (std::size_t b = 0; b < n; ++b) {
      const auto& v = m.at(a, b);
      if (v.has_value() != m.at(b, a).has_value() || (v && *v != *m.at(b, a)))
        problems.push_back("asymmetric entry (" + m.system_ids[a] + ", " + m.system_ids[b] + ")");
      if (v && (*v < -1.0 || *v > 1.0 || std::isnan(*v)))
        problems.push_back("entry (" + m.system_ids[a] + ", " + m.system_ids[b] +
                           ") outside [-1, 1]");
    }
  }
  return problems;
}

GroupMeans group_means(const SimilarityMatrix& m, const RunManifest& manifest) {
  double sums[3] = {0, 0, 0};
  long counts[3] = {0, 0, 0};
  auto is_human = [&](std::size_t i) {
    const auto* s = manifest.find_system(m.system_ids[i]);
    return s && s->kind == SystemKind::Human;
  };
  for (std::size_t a = 0; a < m.size(); ++a) {
    for (std::size_t b = a + 1; b < m.size(); ++b) {
      const auto& v = m.at(a, b);
      if (!v) continue;
      const int slot = is_human(a) && is_human(b) ? 0 : (!is_human(a) && !is_human(b) ? 2 : 1);
      sums[slot] += *v;
      ++counts[slot];
    }
  }
  auto mean = [&](int k) -> std::optional<double> {
    if (counts[k] == 0) return std::nullopt;
    return sums[k] / static_cast<double>(counts[k]);
  };
  return {mean(0), mean(1), mean(2)};
}

std::vector<std::string> heatmap_order(std::span<const std::string> ids, const RunManifest& manifest) {
  std::vector<std::string> humans, vlms;
  for (const auto& id : ids) {
    const auto* s = manifest.find_system(id);
    (s && s->kind == SystemKind::Human ? humans : vlms).push_back(id);
  }
  std::sort(humans.begin(), humans.end());
  std::sort(vlms.begin(), vlms.end());
  humans.insert(humans.end(), vlms.begin(), vlms.end());
  return humans;
}

Json to_json(const SimilarityMatrix& m) {
  Json rows = Json::array();
  for (std::size_t a = 0; a < m.size(); ++a) {
    Json row = Json::array();
    for (std::size_t b = 0; b < m.size(); ++b) {
      const auto& v = m.at(a, b);
      row.push_back(v ? Json(*v) : Json(nullptr));
    }
    rows.push_back(std::move(row));
  }
  return {{"block", to_string(m.block)}, {"system_ids", m.system_ids}, {"matrix", std::move(rows)}};
}

SimilarityMatrix similarity_from_json(const Json& j) {
  SimilarityMatrix m;
  m.block = parse_analysis_block(j.at("block").get<std::string>());
  m.system_ids = j.at("system_ids").get<std::vector<std::string>>();
  for (const auto& row : j.at("matrix"))
    for (const auto& v : row)
      m.entries.push_back(v.is_null() ? std::nullopt : std::optional<double>(v.get<double>()));
  return m;
}

Json to_json(const SystemGramian& g) {
  Json idx = Json::array();
  for (const auto& c : g.indices) idx.push_back({{"video_id", c.video_id}, {"qid", c.qid}});
  Json rows = Json::array();
  for (std::size_t i = 0; i < g.matrix.rows; ++i) {
    const auto r = g.matrix.row(i);
    rows.push_back(std::vector<double>(r.begin(), r.end()));
  }
  return {{"system_id", g.system_id}, {"indices", std::move(idx)}, {"matrix", std::move(rows)}};
}

std::string to_csv(const SimilarityMatrix& m, std::span<const std::string> order) {
  std::ostringstream out;
  out << "system_id";
  for (const auto& id : order) out << ',' << id;
  out << '\n';
  for (const auto& a : order) {
    const auto ia = m.index_of(a);
    if (!ia) throw ComputeError("system '" + a + "' not in similarity matrix");
    out << a;
    for (const auto& b : order) {
      const auto ib = m.index_of(b);
      if (!ib) throw ComputeError("system '" + b + "' not in similarity matrix");
      out << ',';
      if (const auto& v = m.at(*ia, *ib)) out << util::format_double(*v);
    }
    out << '\n';
  }
  return out.str();
}

BlockAnalysis analyze_block(const embedding::EmbeddedAnswerSet& set, const RunManifest& manifest,
                            AnalysisBlock block) {
  std::vector<std::string> ids;
  for (const auto& s : manifest.systems) ids.push_back(s.id);

  std::vector<CellKey> candidates = manifest.cells();
  if (block != AnalysisBlock::All) {
    auto parts = partition_by_block(candidates, manifest.questions);
    candidates.clear();
    for (auto& [b, cells] : parts)
      if (from_block(b) == block) candidates = std::move(cells);
  }

  BlockAnalysis out;
  out.block = block;
  out.indices = align_indices(set, ids, candidates);
  for (const auto& id : ids) out.gramians.push_back(build_gramian(set, id, out.indices.indices));
  out.similarity = build_similarity_matrix(out.gramians, block);
  return out;
}

}  // namespace vqalign::rsa
