#include "vqalign/metric.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "vqalign/errors.hpp"
#include "vqalign/kernels.hpp"
#include "vqalign/util.hpp"

namespace vqalign::metric {

namespace {

kernels::Matrix stack(const std::vector<const embedding::EmbeddingVector*>& vs) {
  kernels::Matrix x(vs.size(), vs.front()->dim());
  for (std::size_t i = 0; i < vs.size(); ++i) {
    if (vs[i]->dim() != x.cols) throw ComputeError("embedding dimension mismatch");
    std::copy(vs[i]->values.begin(), vs[i]->values.end(), x.row(i).begin());
  }
  return x;
}

// Linear interpolation between order statistics.
double quantile(const std::vector<double>& sorted, double p) {
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

}  // namespace

embedding::EmbeddingVector median_embedding(std::span<const embedding::EmbeddingVector> vectors) {
  if (vectors.empty()) throw ComputeError("median of an empty list of embeddings");
  std::vector<const embedding::EmbeddingVector*> ptrs;
  for (const auto& v : vectors) ptrs.push_back(&v);
  auto med = kernels::parallel::column_medians(stack(ptrs));
  return {std::move(med), vectors.front().model_id, false};
}

std::string_view to_string(MedianScope s) { return s == MedianScope::All ? "all" : "group"; }

MedianScope parse_median_scope(std::string_view s) {
  if (s == "all") return MedianScope::All;
  if (s == "group") return MedianScope::Group;
  throw ConfigError("median scope must be all or group");
}

std::string MedianDistanceTable::to_csv() const {
  std::ostringstream out;
  out << "system_id,video_id,qid,block,kind,distance\n";
  for (const auto& r : rows)
    out << r.system_id << ',' << r.video_id << ',' << r.qid << ',' << vqalign::to_string(r.block)
        << ',' << vqalign::to_string(r.kind) << ',' << util::format_double(r.distance) << '\n';
  return out.str();
}

MedianDistanceTable distance_to_median(const embedding::EmbeddedAnswerSet& set,
                                       const RunManifest& manifest, MedianScope scope) {
  MedianDistanceTable table;
  table.pooling_mode = set.pooling_mode;
  table.model_id = set.model_id;
  table.scope = scope;

  const auto cells = manifest.cells();
  std::vector<std::vector<DistanceRow>> per_cell(cells.size());

#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t c = 0; c < static_cast<std::ptrdiff_t>(cells.size()); ++c) {
    const CellKey& cell = cells[c];
    // Groups of systems sharing one median.
    std::vector<std::vector<const SystemProfile*>> groups(scope == MedianScope::All ? 1 : 2);
    for (const auto& s : manifest.systems) {
      if (!set.find(s.id, cell.video_id, cell.qid)) continue;
      const std::size_t g = scope == MedianScope::All ? 0 : (s.kind == SystemKind::Human ? 0 : 1);
      groups[g].push_back(&s);
    }
    for (const auto& members : groups) {
      if (members.empty()) continue;
      std::vector<const embedding::EmbeddingVector*> vs;
      for (const auto* s : members) vs.push_back(set.find(s->id, cell.video_id, cell.qid));
      const auto x = stack(vs);
      const auto med = kernels::serial::column_medians(x);
      const auto dist = kernels::serial::row_distances(x, med);
      for (std::size_t i = 0; i < members.size(); ++i)
        per_cell[c].push_back({members[i]->id, cell.video_id, cell.qid, block_of_qid(cell.qid),
                               members[i]->kind, dist[i]});
    }
  }

  for (std::size_t c = 0; c < cells.size(); ++c) {
    if (per_cell[c].empty()) {
      table.skipped.push_back(cells[c]);
      continue;
    }
    // Row order follows manifest system order within each cell.
    std::sort(per_cell[c].begin(), per_cell[c].end(), [&](const DistanceRow& a, const DistanceRow& b) {
      auto pos = [&](const std::string& id) {
        for (std::size_t i = 0; i < manifest.systems.size(); ++i)
          if (manifest.systems[i].id == id) return i;
        return manifest.systems.size();
      };
      return pos(a.system_id) < pos(b.system_id);
    });
    for (auto& r : per_cell[c]) table.rows.push_back(std::move(r));
  }
  return table;
}

std::vector<double> HistogramSpec::edges() const {
  std::vector<double> e(bins + 1);
  for (std::size_t i = 0; i <= bins; ++i)
    e[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(bins);
  return e;
}

Json DistributionSummary::to_json() const {
  return {{"count", count},   {"mean", mean},     {"median", median},
          {"q1", q1},         {"q3", q3},         {"histogram_edges", edges},
          {"histogram_counts", counts}, {"above_range", above_range}};
}

DistributionSummary summarize(std::span<const double> values, const HistogramSpec& spec) {
  if (values.empty()) throw ComputeError("cannot summarize an empty sample");
  if (spec.bins == 0 || !(spec.hi > spec.lo)) throw ConfigError("invalid histogram spec");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());

  DistributionSummary s;
  s.count = sorted.size();
  double sum = 0.0;
  for (double v : sorted) sum += v;
  s.mean = sum / static_cast<double>(s.count);
  s.median = quantile(sorted, 0.5);
  s.q1 = quantile(sorted, 0.25);
  s.q3 = quantile(sorted, 0.75);
  s.edges = spec.edges();
  s.counts.assign(spec.bins, 0);
  const double width = (spec.hi - spec.lo) / static_cast<double>(spec.bins);
  for (double v : sorted) {
    if (v > spec.hi) ++s.above_range;
    auto bin = static_cast<std::ptrdiff_t>(std::floor((v - spec.lo) / width));
    bin = std::clamp<std::ptrdiff_t>(bin, 0, static_cast<std::ptrdiff_t>(spec.bins) - 1);
    ++s.counts[static_cast<std::size_t>(bin)];
  }
  return s;
}

std::map<GroupKey, DistributionSummary> summarize_distances(const MedianDistanceTable& table,
                                                            const HistogramSpec& spec) {
  if (table.rows.empty()) throw ComputeError("cannot summarize an empty distance table");
  std::map<GroupKey, std::vector<double>> groups;
  for (const auto& r : table.rows) groups[{r.kind, r.block}].push_back(r.distance);
  std::map<GroupKey, DistributionSummary> out;
  for (const auto& [k, v] : groups) out.emplace(k, summarize(v, spec));
  return out;
}

}  // namespace vqalign::metric
