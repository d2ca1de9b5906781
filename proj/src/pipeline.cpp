#include "vqalign/pipeline.hpp"

#include <algorithm>
#include <map>

#include "vqalign/curation.hpp"
#include "vqalign/errors.hpp"
#include "vqalign/harness.hpp"
#include "vqalign/pca.hpp"
#include "vqalign/util.hpp"

namespace vqalign::pipeline {

namespace fs = std::filesystem;

namespace {

constexpr std::string_view kCurationRules = "mc-rules/1";

std::string stage_version(Stage s) {
  switch (s) {
    case Stage::Ingest: return "ingest/1";
    case Stage::Curate: return "curate/1+" + std::string(kCurationRules);
    case Stage::Embed: return "embed/1";
    case Stage::Rsa: return "rsa/1";
    case Stage::Metric: return "metric/1";
    case Stage::Pca: return "pca/1";
    case Stage::Report: return "report/1";
  }
  return "?";
}

fs::path stage_dir(const RunConfig& c, Stage s) { return c.output_dir / std::string(to_string(s)); }
fs::path manifest_path(const RunConfig& c) { return stage_dir(c, Stage::Ingest) / "manifest.json"; }
fs::path responses_path(const RunConfig& c) { return stage_dir(c, Stage::Ingest) / "responses.jsonl"; }
fs::path curated_path(const RunConfig& c) { return stage_dir(c, Stage::Curate) / "responses.curated.jsonl"; }
fs::path stats_path(const RunConfig& c) { return stage_dir(c, Stage::Curate) / "curation_stats.json"; }
fs::path embeddings_path(const RunConfig& c) { return stage_dir(c, Stage::Embed) / "embeddings.jsonl"; }
fs::path stamp_path(const RunConfig& c, Stage s) {
  return c.output_dir / ".stamps" / (std::string(to_string(s)) + ".json");
}

void require(const fs::path& p, Stage upstream, Stage wanted) {
  if (!fs::exists(p))
    throw DependencyError(std::string(to_string(upstream)),
                          std::string(to_string(wanted)) + " needs " + p.filename().string() +
                              " from the " + std::string(to_string(upstream)) + " stage; run it first");
}

// Hash over a stage's version, extra settings and the bytes of its inputs.
std::string inputs_hash(Stage s, const std::vector<fs::path>& files, const Json& settings) {
  Json j{{"version", stage_version(s)}, {"settings", settings}};
  for (const auto& f : files) j["files"].push_back({f.filename().string(), util::sha256_hex(util::read_file(f))});
  return util::sha256_hex(j.dump());
}

class Outputs {
 public:
  Outputs(const RunConfig& c, Stage s) : config_(c), stage_(s) {}

  void write(const fs::path& path, const std::string& content) {
    if (util::write_if_changed(path, content)) result_.written.push_back(path);
    hashes_[fs::relative(path, config_.output_dir).generic_string()] = util::sha256_hex(content);
  }

  StageResult finish(const std::string& hash) {
    const Json stamp{{"inputs", hash}, {"outputs", hashes_}};
    util::write_if_changed(stamp_path(config_, stage_), stamp.dump(2) + "\n");
    result_.stage = stage_;
    return result_;
  }

 private:
  const RunConfig& config_;
  Stage stage_;
  StageResult result_;
  std::map<std::string, std::string> hashes_;
};

bool up_to_date(const RunConfig& c, Stage s, const std::string& hash) {
  const auto p = stamp_path(c, s);
  if (!fs::exists(p)) return false;
  Json stamp;
  try {
    stamp = Json::parse(util::read_file(p));
  } catch (const Json::exception&) {
    return false;
  }
  if (stamp.value("inputs", "") != hash) return false;
  for (const auto& [rel, sha] : stamp.at("outputs").items()) {
    const auto f = c.output_dir / rel;
    if (!fs::exists(f) || util::sha256_hex(util::read_file(f)) != sha.get<std::string>()) return false;
  }
  return true;
}

Json decision_ledger(const RunConfig& c, const RunManifest* manifest) {
  Json assumed = Json::array();
  if (manifest)
    for (const auto& s : manifest->systems)
      if (s.provider_config && !harness::max_tokens_is_published(s.provider_config->provider))
        assumed.push_back({{"system_id", s.id}, {"max_tokens", s.provider_config->max_tokens}});
  return {{"normalization", c.unit_norm ? "unit-norm embeddings" : "raw embeddings"},
          {"pooling", embedding::to_string(c.pooling_mode)},
          {"single_mode_repetition", "lowest non-ignored repetition"},
          {"median_convention",
           std::string("componentwise median over ") +
               (c.median_scope == metric::MedianScope::All ? "all systems" : "each system kind") +
               " per (video, qid); even counts average the middle pair"},
          {"triangle", "strict upper triangle (diagonal excluded)"},
          {"undefined_correlation", "null when a triangle's spread is <= 1e-12 x its max |value|"},
          {"curation_rules", kCurationRules},
          {"prompt_suffix", harness::kPromptSuffixVersion},
          {"pca", "thin SVD of centered data; largest |loading| of each axis positive"},
          {"assumed_max_tokens", assumed}};
}

void update_metadata(const RunConfig& c, Stage s) {
  const auto path = c.output_dir / "run_metadata.json";
  Json meta = Json::object();
  if (fs::exists(path)) {
    try {
      meta = Json::parse(util::read_file(path));
    } catch (const Json::exception&) {
      meta = Json::object();
    }
  }
  std::optional<RunManifest> manifest;
  if (fs::exists(manifest_path(c))) manifest = load_run_manifest(manifest_path(c));
  meta["config_hash"] = c.hash();
  meta["model_id"] = c.model_id;
  meta["decision_ledger"] = decision_ledger(c, manifest ? &*manifest : nullptr);
  meta["stage_versions"][std::string(to_string(s))] = stage_version(s);
  meta["timestamps"][std::string(to_string(s))] = util::iso8601_now();
  util::write_if_changed(path, meta.dump(2) + "\n");
}

std::string block_name(rsa::AnalysisBlock b) { return std::string(rsa::to_string(b)); }

// ---- stages ---------------------------------------------------------------

StageResult ingest(const RunConfig& c) {
  if (!fs::exists(c.manifest)) throw ValidationError("manifest not found: " + c.manifest.string());
  if (c.responses.empty()) throw ConfigError("responses: no response files configured");
  std::vector<fs::path> inputs{c.manifest};
  for (const auto& r : c.responses) {
    if (!fs::exists(r)) throw ValidationError("response file not found: " + r.string());
    inputs.push_back(r);
  }
  const auto hash = inputs_hash(Stage::Ingest, inputs, Json::object());
  if (up_to_date(c, Stage::Ingest, hash)) return {Stage::Ingest, true, {}};

  const auto manifest = load_run_manifest(c.manifest);
  std::vector<ResponseRecord> records;
  for (const auto& r : c.responses) {
    auto part = load_responses(r);
    records.insert(records.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
  }
  std::sort(records.begin(), records.end(), [](const auto& a, const auto& b) { return key_of(a) < key_of(b); });

  Outputs out(c, Stage::Ingest);
  const auto report = validate_responses(records, manifest);
  out.write(stage_dir(c, Stage::Ingest) / "validation_report.json", report.to_json().dump(2) + "\n");
  if (!report.duplicates.empty() || !report.unknown_ids.empty() || !report.invariant_violations.empty()) {
    std::string msg = "responses failed validation:";
    for (const auto& u : report.unknown_ids) msg += " unknown " + u + ";";
    for (const auto& d : report.duplicates)
      msg += " duplicate " + d.system_id + "/" + d.video_id + "/" + std::to_string(d.qid) + "/" +
             std::to_string(d.repetition) + ";";
    for (const auto& v : report.invariant_violations) msg += " " + v + ";";
    throw ValidationError(msg);
  }
  out.write(manifest_path(c), serialize_manifest(manifest));
  out.write(responses_path(c), serialize_responses(records));
  return out.finish(hash);
}

StageResult curate_stage(const RunConfig& c) {
  require(manifest_path(c), Stage::Ingest, Stage::Curate);
  require(responses_path(c), Stage::Ingest, Stage::Curate);
  const auto hash = inputs_hash(Stage::Curate, {manifest_path(c), responses_path(c)}, Json::object());
  if (up_to_date(c, Stage::Curate, hash)) return {Stage::Curate, true, {}};

  const auto manifest = load_run_manifest(manifest_path(c));
  const auto result = curation::curate(load_responses(responses_path(c)), manifest);
  Outputs out(c, Stage::Curate);
  out.write(curated_path(c), serialize_responses(result.records));
  out.write(stats_path(c), result.stats.to_json().dump(2) + "\n");
  return out.finish(hash);
}

StageResult embed_stage(const RunConfig& c) {
  require(manifest_path(c), Stage::Ingest, Stage::Embed);
  require(curated_path(c), Stage::Curate, Stage::Embed);
  Json settings{{"embedding", c.canonical.value("embedding", Json::object())},
                {"pooling", embedding::to_string(c.pooling_mode)},
                {"seed", c.seed}};
  std::vector<fs::path> inputs{manifest_path(c), curated_path(c)};
  if (c.backend.kind == "fixture") {
    if (!fs::exists(c.backend.fixture))
      throw DependencyError("embed", "embedding fixture not found: " + c.backend.fixture.string());
    inputs.push_back(c.backend.fixture);
  }
  const auto hash = inputs_hash(Stage::Embed, inputs, settings);
  if (up_to_date(c, Stage::Embed, hash)) return {Stage::Embed, true, {}};

  const auto manifest = load_run_manifest(manifest_path(c));
  const auto curated = load_responses(curated_path(c));
  auto backend = embedding::make_backend(c.backend);
  const std::size_t expected =
      c.backend.kind == "hash" ? c.backend.dimension : embedding::known_dimension(c.model_id).value_or(0);
  embedding::Embedder embedder(*backend, c.model_id, c.unit_norm, expected);
  const auto set = embedding::build_embedded_set(curated, manifest, embedder, c.pooling_mode);

  Outputs out(c, Stage::Embed);
  out.write(embeddings_path(c), set.serialize());
  return out.finish(hash);
}

StageResult rsa_stage(const RunConfig& c) {
  require(manifest_path(c), Stage::Ingest, Stage::Rsa);
  require(embeddings_path(c), Stage::Embed, Stage::Rsa);
  Json blocks = Json::array();
  for (auto b : c.blocks) blocks.push_back(block_name(b));
  const auto hash = inputs_hash(Stage::Rsa, {manifest_path(c), embeddings_path(c)}, {{"blocks", blocks}});
  if (up_to_date(c, Stage::Rsa, hash)) return {Stage::Rsa, true, {}};

  const auto manifest = load_run_manifest(manifest_path(c));
  const auto set = embedding::EmbeddedAnswerSet::parse(util::read_file(embeddings_path(c)));
  std::vector<std::string> ids;
  for (const auto& s : manifest.systems) ids.push_back(s.id);
  const auto order = rsa::heatmap_order(ids, manifest);

  Outputs out(c, Stage::Rsa);
  Json invariants = Json::object();
  std::vector<std::string> violations;
  for (auto b : c.blocks) {
    const auto analysis = rsa::analyze_block(set, manifest, b);
    const auto problems = rsa::check_invariants(analysis.similarity);
    invariants[block_name(b)] = problems;
    for (const auto& p : problems) violations.push_back(block_name(b) + ": " + p);

    Json m = rsa::to_json(analysis.similarity);
    auto cells = [](const std::vector<CellKey>& v) {
      Json a = Json::array();
      for (const auto& k : v) a.push_back({{"video_id", k.video_id}, {"qid", k.qid}});
      return a;
    };
    m["indices"] = cells(analysis.indices.indices);
    m["dropped"] = cells(analysis.indices.dropped);
    Json grams = Json::array();
    for (const auto& g : analysis.gramians) grams.push_back(rsa::to_json(g));

    const auto dir = stage_dir(c, Stage::Rsa);
    out.write(dir / ("M_" + block_name(b) + ".json"), m.dump(2) + "\n");
    out.write(dir / ("M_" + block_name(b) + ".csv"), rsa::to_csv(analysis.similarity, order));
    out.write(dir / ("gramians_" + block_name(b) + ".json"), grams.dump() + "\n");
  }
  out.write(stage_dir(c, Stage::Rsa) / "invariants.json", invariants.dump(2) + "\n");
  if (!violations.empty()) {
    std::string msg = "similarity matrix invariants violated:";
    for (const auto& v : violations) msg += " " + v + ";";
    throw ComputeError(msg);
  }
  return out.finish(hash);
}

StageResult metric_stage(const RunConfig& c) {
  require(manifest_path(c), Stage::Ingest, Stage::Metric);
  require(embeddings_path(c), Stage::Embed, Stage::Metric);
  const Json settings{{"bins", c.histogram.bins},
                      {"lo", c.histogram.lo},
                      {"hi", c.histogram.hi},
                      {"scope", metric::to_string(c.median_scope)}};
  const auto hash = inputs_hash(Stage::Metric, {manifest_path(c), embeddings_path(c)}, settings);
  if (up_to_date(c, Stage::Metric, hash)) return {Stage::Metric, true, {}};

  const auto manifest = load_run_manifest(manifest_path(c));
  const auto set = embedding::EmbeddedAnswerSet::parse(util::read_file(embeddings_path(c)));
  const auto table = metric::distance_to_median(set, manifest, c.median_scope);
  const auto summaries = metric::summarize_distances(table, c.histogram);

  Json groups = Json::array();
  for (const auto& [key, s] : summaries) {
    auto j = s.to_json();
    j["kind"] = to_string(key.first);
    j["block"] = to_string(key.second);
    groups.push_back(std::move(j));
  }
  Json skipped = Json::array();
  for (const auto& k : table.skipped) skipped.push_back({{"video_id", k.video_id}, {"qid", k.qid}});
  const Json summary{{"model_id", table.model_id},
                     {"pooling_mode", embedding::to_string(table.pooling_mode)},
                     {"scope", metric::to_string(table.scope)},
                     {"groups", groups},
                     {"skipped_cells", skipped}};

  Outputs out(c, Stage::Metric);
  out.write(stage_dir(c, Stage::Metric) / "distances.csv", table.to_csv());
  out.write(stage_dir(c, Stage::Metric) / "distance_summary.json", summary.dump(2) + "\n");
  return out.finish(hash);
}

StageResult pca_stage(const RunConfig& c) {
  require(manifest_path(c), Stage::Ingest, Stage::Pca);
  require(embeddings_path(c), Stage::Embed, Stage::Pca);
  Json blocks = Json::array();
  for (auto b : c.blocks) blocks.push_back(block_name(b));
  const auto hash = inputs_hash(Stage::Pca, {manifest_path(c), embeddings_path(c)}, {{"blocks", blocks}});
  if (up_to_date(c, Stage::Pca, hash)) return {Stage::Pca, true, {}};

  const auto manifest = load_run_manifest(manifest_path(c));
  const auto set = embedding::EmbeddedAnswerSet::parse(util::read_file(embeddings_path(c)));

  std::vector<pca::PcaProjection> projections(c.blocks.size());
  std::vector<std::exception_ptr> errors(c.blocks.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(c.blocks.size()); ++i) {
    try {
      projections[i] = pca::pca_2d(pca::collect_block(set, manifest, c.blocks[i]), c.blocks[i]);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  Outputs out(c, Stage::Pca);
  Json meta = Json::object();
  for (const auto& p : projections) {
    const auto file = "pca_block" + std::to_string(block_number(p.block)) + ".csv";
    out.write(stage_dir(c, Stage::Pca) / file, pca::to_csv(p, manifest));
    auto j = pca::meta_json(p);
    j["csv"] = file;
    meta[block_name(p.block)] = std::move(j);
  }
  out.write(stage_dir(c, Stage::Pca) / "pca_meta.json", meta.dump(2) + "\n");
  return out.finish(hash);
}

StageResult report_stage(const RunConfig& c) {
  require(manifest_path(c), Stage::Ingest, Stage::Report);
  require(stats_path(c), Stage::Curate, Stage::Report);
  std::vector<fs::path> inputs{manifest_path(c), stats_path(c)};
  for (auto b : c.blocks) {
    const auto m = stage_dir(c, Stage::Rsa) / ("M_" + block_name(b) + ".json");
    require(m, Stage::Rsa, Stage::Report);
    inputs.push_back(m);
  }
  const auto summary_path = stage_dir(c, Stage::Metric) / "distance_summary.json";
  const auto pca_meta_path = stage_dir(c, Stage::Pca) / "pca_meta.json";
  require(summary_path, Stage::Metric, Stage::Report);
  require(pca_meta_path, Stage::Pca, Stage::Report);
  inputs.push_back(summary_path);
  inputs.push_back(pca_meta_path);
  const auto hash = inputs_hash(Stage::Report, inputs, Json::object());
  if (up_to_date(c, Stage::Report, hash)) return {Stage::Report, true, {}};

  const auto manifest = load_run_manifest(manifest_path(c));
  const auto summary = Json::parse(util::read_file(summary_path));
  const auto pca_meta = Json::parse(util::read_file(pca_meta_path));
  const auto stats = curation::CurationStats::from_json(Json::parse(util::read_file(stats_path(c))));

  auto opt = [](const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); };
  Json blocks = Json::object();
  for (auto b : c.blocks) {
    const auto mj = Json::parse(util::read_file(stage_dir(c, Stage::Rsa) / ("M_" + block_name(b) + ".json")));
    const auto m = rsa::similarity_from_json(mj);
    const auto means = rsa::group_means(m, manifest);
    Json distances = Json::array();
    for (const auto& g : summary.at("groups"))
      if (g.at("block") == block_name(b)) distances.push_back(g);
    blocks[block_name(b)] = {
        {"group_means",
         {{"human_human", opt(means.human_human)},
          {"human_vlm", opt(means.human_vlm)},
          {"vlm_vlm", opt(means.vlm_vlm)}}},
        {"stimuli", mj.at("indices").size()},
        {"dropped_stimuli", mj.at("dropped").size()},
        {"similarity", mj.at("matrix")},
        {"system_ids", mj.at("system_ids")},
        {"matrix_csv", "rsa/M_" + block_name(b) + ".csv"},
        {"distance_summary", distances},
        {"pca", pca_meta.value(block_name(b), Json::object())}};
  }
  const auto totals = stats.totals();
  const Json report{{"config_hash", c.hash()},
                    {"model_id", c.model_id},
                    {"pooling_mode", embedding::to_string(c.pooling_mode)},
                    {"curation",
                     {{"modifications", totals.modifications},
                      {"ignored", totals.ignored},
                      {"total", totals.total}}},
                    {"blocks", blocks}};
  Outputs out(c, Stage::Report);
  out.write(stage_dir(c, Stage::Report) / "report.json", report.dump(2) + "\n");
  return out.finish(hash);
}

}  // namespace

std::string_view to_string(Stage s) {
  switch (s) {
    case Stage::Ingest: return "ingest";
    case Stage::Curate: return "curate";
    case Stage::Embed: return "embed";
    case Stage::Rsa: return "rsa";
    case Stage::Metric: return "metric";
    case Stage::Pca: return "pca";
    case Stage::Report: return "report";
  }
  return "?";
}

Stage parse_stage(std::string_view s) {
  for (auto st : all_stages())
    if (to_string(st) == s) return st;
  throw ConfigError("unknown stage '" + std::string(s) + "'");
}

const std::vector<Stage>& all_stages() {
  static const std::vector<Stage> kStages{Stage::Ingest, Stage::Curate, Stage::Embed, Stage::Rsa,
                                          Stage::Metric, Stage::Pca,    Stage::Report};
  return kStages;
}

int block_number(rsa::AnalysisBlock b) {
  switch (b) {
    case rsa::AnalysisBlock::Variable: return 1;
    case rsa::AnalysisBlock::MultipleChoice: return 2;
    case rsa::AnalysisBlock::Counterfactual: return 3;
    case rsa::AnalysisBlock::All: return 0;
  }
  return 0;
}

StageResult run_stage(Stage stage, const RunConfig& config) {
  StageResult r;
  switch (stage) {
    case Stage::Ingest: r = ingest(config); break;
    case Stage::Curate: r = curate_stage(config); break;
    case Stage::Embed: r = embed_stage(config); break;
    case Stage::Rsa: r = rsa_stage(config); break;
    case Stage::Metric: r = metric_stage(config); break;
    case Stage::Pca: r = pca_stage(config); break;
    case Stage::Report: r = report_stage(config); break;
  }
  if (!r.skipped) update_metadata(config, stage);
  return r;
}

std::vector<StageResult> run_all(const RunConfig& config) {
  std::vector<StageResult> out;
  for (auto s : all_stages()) out.push_back(run_stage(s, config));
  return out;
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ValidationError*>(&e) || dynamic_cast<const ConfigError*>(&e) ||
      dynamic_cast<const ParseError*>(&e))
    return 2;
  if (dynamic_cast<const DependencyError*>(&e) || dynamic_cast<const TransportError*>(&e)) return 3;
  return 1;
}

}  // namespace vqalign::pipeline
