#include "vqalign/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <set>

#include "httplib.h"
#include "vqalign/errors.hpp"
#include "vqalign/util.hpp"

namespace vqalign::embedding {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

std::vector<std::string> word_tokens(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (unsigned char c : text) {
    if (std::isalnum(c) || c >= 0x80) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

}  // namespace

const std::vector<ModelInfo>& known_models() {
  static const std::vector<ModelInfo> kModels{
      {"all-mpnet-base-v2", 768}, {"paraphrase-mpnet-base-v2", 768}, {"e5-large-v2", 1024}};
  return kModels;
}

std::optional<std::size_t> known_dimension(std::string_view model_id) {
  for (const auto& m : known_models())
    if (m.id == model_id) return m.dimension;
  return std::nullopt;
}

double EmbeddingVector::norm() const {
  double s = 0.0;
  for (double v : values) s += v * v;
  return std::sqrt(s);
}

// ---- HashBackend ---------------------------------------------------------

HashBackend::HashBackend(std::size_t dimension, std::uint64_t seed)
    : dimension_(dimension), seed_(seed) {
  if (dimension == 0) throw ConfigError("hash backend dimension must be positive");
}

std::vector<std::vector<double>> HashBackend::embed_batch(std::string_view model_id,
                                                          std::span<const std::string> texts) {
  const std::uint64_t model_salt = fnv1a(model_id);
  std::vector<std::vector<double>> out;
  out.reserve(texts.size());
  for (const auto& text : texts) {
    auto tokens = word_tokens(text);
    if (tokens.empty()) tokens.emplace_back("<empty>");
    std::vector<double> v(dimension_, 0.0);
    for (const auto& tok : tokens) {
      const std::uint64_t base = splitmix64(fnv1a(tok) ^ seed_ ^ model_salt);
      for (std::size_t i = 0; i < dimension_; ++i) {
        const std::uint64_t r = splitmix64(base + i);
        // Top 53 bits -> uniform in [-1, 1).
        v[i] += static_cast<double>(r >> 11) * 0x1.0p-52 - 1.0;
      }
    }
    out.push_back(std::move(v));
  }
  return out;
}

std::string HashBackend::version() const {
  return "hash-v1/d" + std::to_string(dimension_) + "/seed" + std::to_string(seed_);
}

// ---- FixtureBackend ------------------------------------------------------

FixtureBackend::FixtureBackend(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path))
    throw ConfigError("embedding fixture not found: " + path.string());
  const std::string content = util::read_file(path);
  digest_ = util::sha256_hex(content);
  std::size_t pos = 0, line_no = 0;
  while (pos < content.size()) {
    std::size_t nl = content.find('\n', pos);
    if (nl == std::string::npos) nl = content.size();
    const std::string_view line(content.data() + pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (util::trim(line).empty()) continue;
    try {
      const Json j = Json::parse(line);
      table_[{j.at("model_id").get<std::string>(), j.at("key").get<std::string>()}] =
          j.at("vector").get<std::vector<double>>();
    } catch (const Json::exception& e) {
      throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
}

std::string FixtureBackend::content_key(std::string_view text) { return util::sha256_hex(text); }

std::string FixtureBackend::fixture_line(std::string_view model_id, std::string_view text,
                                         std::span<const double> vector) {
  Json j{{"model_id", model_id},
         {"key", content_key(text)},
         {"vector", std::vector<double>(vector.begin(), vector.end())}};
  return j.dump();
}

std::vector<std::vector<double>> FixtureBackend::embed_batch(std::string_view model_id,
                                                             std::span<const std::string> texts) {
  std::vector<std::vector<double>> out;
  out.reserve(texts.size());
  for (const auto& t : texts) {
    auto it = table_.find({std::string(model_id), content_key(t)});
    if (it == table_.end())
      throw TransportError("embedding fixture has no vector for model '" + std::string(model_id) +
                           "' and text \"" + t.substr(0, 60) + "\"");
    out.push_back(it->second);
  }
  return out;
}

std::string FixtureBackend::version() const { return "fixture/" + digest_.substr(0, 16); }

// ---- HttpBackend ---------------------------------------------------------

HttpBackend::HttpBackend(std::string endpoint, std::size_t batch_size, std::size_t max_in_flight)
    : endpoint_(std::move(endpoint)),
      batch_size_(std::max<std::size_t>(1, batch_size)),
      max_in_flight_(std::max<std::size_t>(1, max_in_flight)) {
  util::split_url(endpoint_);
}

std::vector<std::vector<double>> HttpBackend::embed_batch(std::string_view model_id,
                                                          std::span<const std::string> texts) {
  const util::UrlParts ep = util::split_url(endpoint_);
  auto request = [&](std::size_t begin, std::size_t end) {
    httplib::Client client(ep.base);
    client.set_read_timeout(120, 0);
    Json body{{"model_id", model_id},
              {"texts", std::vector<std::string>(texts.begin() + begin, texts.begin() + end)}};
    auto res = client.Post(ep.path, body.dump(), "application/json");
    if (!res) throw TransportError("embedding backend unreachable at " + endpoint_ + ": " +
                                   httplib::to_string(res.error()));
    if (res->status != 200)
      throw TransportError("embedding backend returned HTTP " + std::to_string(res->status));
    Json reply;
    try {
      reply = Json::parse(res->body);
      auto vectors = reply.at("vectors").get<std::vector<std::vector<double>>>();
      if (vectors.size() != end - begin)
        throw TransportError("embedding backend returned " + std::to_string(vectors.size()) +
                             " vectors for " + std::to_string(end - begin) + " texts");
      return vectors;
    } catch (const Json::exception& e) {
      throw TransportError(std::string("malformed embedding response: ") + e.what());
    }
  };

  std::vector<std::vector<double>> out(texts.size());
  std::vector<std::pair<std::size_t, std::future<std::vector<std::vector<double>>>>> inflight;
  auto drain_one = [&] {
    auto [begin, fut] = std::move(inflight.front());
    inflight.erase(inflight.begin());
    auto vecs = fut.get();
    for (std::size_t i = 0; i < vecs.size(); ++i) out[begin + i] = std::move(vecs[i]);
  };
  for (std::size_t begin = 0; begin < texts.size(); begin += batch_size_) {
    const std::size_t end = std::min(texts.size(), begin + batch_size_);
    if (inflight.size() >= max_in_flight_) drain_one();
    inflight.emplace_back(begin, std::async(std::launch::async, request, begin, end));
  }
  while (!inflight.empty()) drain_one();
  return out;
}

std::string HttpBackend::version() const { return "http/" + endpoint_; }

std::unique_ptr<Backend> make_backend(const BackendConfig& config) {
  if (config.kind == "hash") return std::make_unique<HashBackend>(config.dimension, config.seed);
  if (config.kind == "fixture") return std::make_unique<FixtureBackend>(config.fixture);
  if (config.kind == "http") {
    if (config.endpoint.empty()) throw ConfigError("embedding.endpoint is required for http backend");
    return std::make_unique<HttpBackend>(config.endpoint, 64, config.max_in_flight);
  }
  throw ConfigError("unknown embedding backend '" + config.kind + "'");
}

// ---- Embedder ------------------------------------------------------------

Embedder::Embedder(Backend& backend, std::string model_id, bool unit_norm, std::size_t expected_dim)
    : backend_(backend), model_id_(std::move(model_id)), unit_norm_(unit_norm), dim_(expected_dim) {}

EmbeddingVector Embedder::finish(std::vector<double> raw) {
  if (raw.empty()) throw ConfigError("embedding backend returned an empty vector");
  if (dim_ == 0) dim_ = raw.size();
  if (raw.size() != dim_)
    throw ConfigError("embedding dimension " + std::to_string(raw.size()) +
                      " does not match configured " + std::to_string(dim_) + " for model " +
                      model_id_);
  EmbeddingVector v{std::move(raw), model_id_, unit_norm_};
  if (unit_norm_) {
    const double n = v.norm();
    if (n == 0.0) throw ComputeError("cannot normalize a zero embedding");
    for (double& x : v.values) x /= n;
  }
  return v;
}

EmbeddingVector Embedder::embed(std::string_view text) {
  const std::string key(text);
  return embed_all(std::span<const std::string>(&key, 1)).at(key);
}

std::map<std::string, EmbeddingVector> Embedder::embed_all(std::span<const std::string> texts) {
  std::lock_guard lock(mutex_);
  std::set<std::string> unique(texts.begin(), texts.end());
  std::vector<std::string> todo;
  for (const auto& t : unique)
    if (!cache_.count(t)) todo.push_back(t);
  if (!todo.empty()) {
    auto raw = backend_.embed_batch(model_id_, todo);
    if (raw.size() != todo.size()) throw TransportError("embedding backend dropped texts");
    for (std::size_t i = 0; i < todo.size(); ++i) cache_.emplace(todo[i], finish(std::move(raw[i])));
  }
  std::map<std::string, EmbeddingVector> out;
  for (const auto& t : unique) out.emplace(t, cache_.at(t));
  return out;
}

EmbeddingVector embed_text(Backend& backend, std::string_view text, std::string_view model_id,
                           bool unit_norm, std::size_t expected_dim) {
  Embedder e(backend, std::string(model_id), unit_norm, expected_dim);
  return e.embed(text);
}

EmbeddingVector pool_repetitions(std::span<const EmbeddingVector> vectors) {
  if (vectors.empty()) throw ComputeError("cannot pool an empty list of embeddings");
  const std::size_t d = vectors.front().dim();
  for (const auto& v : vectors) {
    if (v.dim() != d) throw ComputeError("pooled embeddings differ in dimension");
    if (v.model_id != vectors.front().model_id)
      throw ComputeError("pooled embeddings come from different models");
  }
  std::vector<const EmbeddingVector*> order;
  for (const auto& v : vectors) order.push_back(&v);
  std::sort(order.begin(), order.end(),
            [](const EmbeddingVector* a, const EmbeddingVector* b) { return a->values < b->values; });

  EmbeddingVector out{std::vector<double>(d, 0.0), vectors.front().model_id,
                      vectors.front().unit_norm};
  for (const auto* v : order)
    for (std::size_t i = 0; i < d; ++i) out.values[i] += v->values[i];
  for (double& x : out.values) x /= static_cast<double>(vectors.size());

  if (out.unit_norm) {
    const double n = out.norm();
    if (n == 0.0) throw ComputeError("degenerate pool: mean embedding is the zero vector");
    for (double& x : out.values) x /= n;
  } else if (std::all_of(out.values.begin(), out.values.end(), [](double x) { return x == 0.0; })) {
    throw ComputeError("degenerate pool: mean embedding is the zero vector");
  }
  return out;
}

std::string_view to_string(PoolingMode m) { return m == PoolingMode::Pooled ? "pooled" : "single"; }

PoolingMode parse_pooling_mode(std::string_view s) {
  if (s == "pooled") return PoolingMode::Pooled;
  if (s == "single") return PoolingMode::Single;
  throw ConfigError("pooling_mode must be pooled or single, got '" + std::string(s) + "'");
}

// ---- EmbeddedAnswerSet ---------------------------------------------------

const EmbeddingVector* EmbeddedAnswerSet::find(std::string_view system_id,
                                               std::string_view video_id, int qid) const {
  auto it = vectors.find({std::string(system_id), std::string(video_id), qid});
  return it == vectors.end() ? nullptr : &it->second;
}

std::size_t EmbeddedAnswerSet::cells_for(std::string_view system_id) const {
  std::size_t n = 0;
  for (const auto& [k, _] : vectors)
    if (k.system_id == system_id) ++n;
  return n;
}

std::string EmbeddedAnswerSet::serialize() const {
  Json header{{"model_id", model_id},
              {"pooling_mode", to_string(pooling_mode)},
              {"unit_norm", unit_norm},
              {"dimension", dimension},
              {"missing", Json::array()}};
  for (const auto& m : missing)
    header["missing"].push_back({{"system_id", m.cell.system_id},
                                 {"video_id", m.cell.video_id},
                                 {"qid", m.cell.qid},
                                 {"reason", m.reason}});
  std::string out = header.dump() + "\n";
  for (const auto& [k, v] : vectors) {
    Json j{{"system_id", k.system_id}, {"video_id", k.video_id}, {"qid", k.qid}, {"vector", v.values}};
    out += j.dump();
    out += '\n';
  }
  return out;
}

EmbeddedAnswerSet EmbeddedAnswerSet::parse(std::string_view text) {
  EmbeddedAnswerSet set;
  std::size_t pos = 0;
  bool first = true;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    const std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    if (util::trim(line).empty()) continue;
    const Json j = Json::parse(line);
    if (first) {
      set.model_id = j.at("model_id").get<std::string>();
      set.pooling_mode = parse_pooling_mode(j.at("pooling_mode").get<std::string>());
      set.unit_norm = j.at("unit_norm").get<bool>();
      set.dimension = j.at("dimension").get<std::size_t>();
      for (const auto& m : j.at("missing"))
        set.missing.push_back({{m.at("system_id"), m.at("video_id"), m.at("qid")}, m.at("reason")});
      first = false;
      continue;
    }
    set.vectors.emplace(
        SystemCell{j.at("system_id"), j.at("video_id"), j.at("qid")},
        EmbeddingVector{j.at("vector").get<std::vector<double>>(), set.model_id, set.unit_norm});
  }
  if (first) throw ParseError("embedding set is empty");
  return set;
}

EmbeddedAnswerSet build_embedded_set(const std::vector<ResponseRecord>& curated,
                                     const RunManifest& manifest, Embedder& embedder,
                                     PoolingMode mode) {
  // Usable records per cell, ordered by repetition.
  std::map<SystemCell, std::vector<const ResponseRecord*>> by_cell;
  std::map<SystemCell, int> ignored_count;
  for (const auto& r : curated) {
    if (!manifest.find_system(r.system_id)) continue;
    SystemCell key{r.system_id, r.video_id, r.qid};
    if (r.status == ResponseStatus::Ignored) {
      ++ignored_count[key];
      continue;
    }
    by_cell[key].push_back(&r);
  }
  for (auto& [_, recs] : by_cell)
    std::sort(recs.begin(), recs.end(), [](const ResponseRecord* a, const ResponseRecord* b) {
      return a->repetition < b->repetition;
    });

  std::vector<std::string> texts;
  for (auto& [_, recs] : by_cell) {
    if (mode == PoolingMode::Single) recs.resize(1);
    for (const auto* r : recs) texts.push_back(r->effective_text());
  }
  const auto embedded = embedder.embed_all(texts);

  EmbeddedAnswerSet set;
  set.pooling_mode = mode;
  set.model_id = embedder.model_id();
  set.unit_norm = embedder.unit_norm();
  set.dimension = embedder.dimension();
  for (const auto& sys : manifest.systems) {
    for (const auto& cell : manifest.cells()) {
      SystemCell key{sys.id, cell.video_id, cell.qid};
      auto it = by_cell.find(key);
      if (it == by_cell.end()) {
        set.missing.push_back(
            {key, ignored_count.count(key) ? "all repetitions ignored" : "no response"});
        continue;
      }
      std::vector<EmbeddingVector> reps;
      for (const auto* r : it->second) reps.push_back(embedded.at(r->effective_text()));
      try {
        set.vectors.emplace(key, pool_repetitions(reps));
      } catch (const ComputeError& e) {
        set.missing.push_back({key, e.what()});
      }
    }
  }
  return set;
}

}  // namespace vqalign::embedding
