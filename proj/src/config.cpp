#include "vqalign/config.hpp"

#include <set>
#include <sstream>

#include "toml.hpp"
#include "vqalign/errors.hpp"
#include "vqalign/util.hpp"

namespace vqalign {

namespace {

Json to_json(const toml::node& node) {
  if (const auto* t = node.as_table()) {
    Json j = Json::object();
    for (const auto& [k, v] : *t) j[std::string(k.str())] = to_json(v);
    return j;
  }
  if (const auto* a = node.as_array()) {
    Json j = Json::array();
    for (const auto& v : *a) j.push_back(to_json(v));
    return j;
  }
  if (const auto* s = node.as_string()) return s->get();
  if (const auto* i = node.as_integer()) return i->get();
  if (const auto* f = node.as_floating_point()) return f->get();
  if (const auto* b = node.as_boolean()) return b->get();
  throw ConfigError("unsupported TOML value type (dates and times are not used)");
}

void reject_unknown(const Json& j, const std::set<std::string>& known, const std::string& where) {
  for (const auto& [k, _] : j.items())
    if (!known.count(k)) throw ConfigError(where + k + ": unknown key");
}

template <class T>
T get(const Json& j, const char* key, const std::string& where, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const Json::exception&) {
    throw ConfigError(where + key + ": wrong type");
  }
}

}  // namespace

std::string RunConfig::hash() const { return util::sha256_hex(canonical.dump()); }

RunConfig parse_run_config(std::string_view toml_text, const std::filesystem::path& base_dir) {
  Json root;
  try {
    root = to_json(toml::parse(toml_text));
  } catch (const toml::parse_error& e) {
    std::ostringstream msg;
    msg << "config line " << e.source().begin.line << ": " << e.description();
    throw ConfigError(msg.str());
  }
  reject_unknown(root, {"manifest", "responses", "output_dir", "seed", "embedding", "analysis"}, "");

  auto resolve = [&](const std::string& p) {
    const std::filesystem::path path(p);
    return path.is_absolute() ? path : base_dir / path;
  };

  RunConfig c;
  c.canonical = root;
  if (!root.contains("manifest")) throw ConfigError("manifest: missing key");
  c.manifest = resolve(get<std::string>(root, "manifest", "", ""));
  for (const auto& r : get<std::vector<std::string>>(root, "responses", "", {}))
    c.responses.push_back(resolve(r));
  c.output_dir = resolve(get<std::string>(root, "output_dir", "", "out"));
  const auto seed = get<std::int64_t>(root, "seed", "", 0);
  if (seed < 0) throw ConfigError("seed: must be >= 0");
  c.seed = static_cast<std::uint64_t>(seed);

  const Json emb = root.value("embedding", Json::object());
  reject_unknown(emb,
                 {"model_id", "backend", "endpoint", "fixture", "unit_norm", "dimension", "max_in_flight"},
                 "embedding.");
  c.model_id = get<std::string>(emb, "model_id", "embedding.", c.model_id);
  c.backend.kind = get<std::string>(emb, "backend", "embedding.", "fixture");
  if (c.backend.kind != "hash" && c.backend.kind != "fixture" && c.backend.kind != "http")
    throw ConfigError("embedding.backend: must be hash, fixture or http");
  c.backend.endpoint = get<std::string>(emb, "endpoint", "embedding.", "");
  if (emb.contains("fixture")) c.backend.fixture = resolve(get<std::string>(emb, "fixture", "embedding.", ""));
  c.unit_norm = get<bool>(emb, "unit_norm", "embedding.", true);
  const auto dim = get<std::int64_t>(emb, "dimension", "embedding.",
                                     static_cast<std::int64_t>(embedding::known_dimension(c.model_id).value_or(768)));
  if (dim <= 0) throw ConfigError("embedding.dimension: must be positive");
  c.backend.dimension = static_cast<std::size_t>(dim);
  const auto inflight = get<std::int64_t>(emb, "max_in_flight", "embedding.", 4);
  if (inflight <= 0) throw ConfigError("embedding.max_in_flight: must be positive");
  c.backend.max_in_flight = static_cast<std::size_t>(inflight);
  c.backend.seed = c.seed;
  if (c.backend.kind == "http" && c.backend.endpoint.empty())
    throw ConfigError("embedding.endpoint: required for the http backend");
  if (c.backend.kind == "fixture" && c.backend.fixture.empty())
    throw ConfigError("embedding.fixture: required for the fixture backend");

  const Json an = root.value("analysis", Json::object());
  reject_unknown(an,
                 {"pooling_mode", "blocks", "histogram_bins", "histogram_min", "histogram_max",
                  "median_scope"},
                 "analysis.");
  try {
    c.pooling_mode = embedding::parse_pooling_mode(get<std::string>(an, "pooling_mode", "analysis.", "pooled"));
    c.median_scope = metric::parse_median_scope(get<std::string>(an, "median_scope", "analysis.", "all"));
    if (an.contains("blocks")) {
      c.blocks.clear();
      for (const auto& b : get<std::vector<std::string>>(an, "blocks", "analysis.", {})) {
        const auto block = rsa::parse_analysis_block(b);
        if (block == rsa::AnalysisBlock::All) throw ConfigError("analysis.blocks: use block names, not all");
        c.blocks.push_back(block);
      }
      if (c.blocks.empty()) throw ConfigError("analysis.blocks: empty");
    }
  } catch (const ValidationError& e) {
    throw ConfigError(std::string("analysis: ") + e.what());
  }
  const auto bins = get<std::int64_t>(an, "histogram_bins", "analysis.", 40);
  if (bins <= 0) throw ConfigError("analysis.histogram_bins: must be positive");
  c.histogram.bins = static_cast<std::size_t>(bins);
  c.histogram.lo = get<double>(an, "histogram_min", "analysis.", 0.0);
  c.histogram.hi = get<double>(an, "histogram_max", "analysis.", 2.0);
  if (!(c.histogram.hi > c.histogram.lo)) throw ConfigError("analysis.histogram_max: must exceed histogram_min");
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw ConfigError("config not found: " + path.string());
  return parse_run_config(util::read_file(path), path.parent_path());
}

}  // namespace vqalign
