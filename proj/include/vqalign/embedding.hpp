#pragma once

// Answer text -> fixed-dimension vectors.
//
// Backends are pluggable: an HTTP sentence-embedding server, a fixture file of
// precomputed vectors keyed by content hash, or a deterministic hashing
// backend for offline tests. The Embedder wraps a backend with caching,
// dimension checks and optional L2 normalization.

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vqalign/model.hpp"

namespace vqalign::embedding {

inline constexpr std::string_view kDefaultModel = "all-mpnet-base-v2";

struct ModelInfo {
  std::string id;
  std::size_t dimension = 0;
};

// The primary sentence-embedding model plus the two alternates.
const std::vector<ModelInfo>& known_models();
std::optional<std::size_t> known_dimension(std::string_view model_id);

struct EmbeddingVector {
  std::vector<double> values;
  std::string model_id;
  bool unit_norm = false;

  std::size_t dim() const { return values.size(); }
  double norm() const;
  friend bool operator==(const EmbeddingVector&, const EmbeddingVector&) = default;
};

class Backend {
 public:
  virtual ~Backend() = default;
  // One vector per input text, in input order.
  virtual std::vector<std::vector<double>> embed_batch(std::string_view model_id,
                                                       std::span<const std::string> texts) = 0;
  virtual std::string version() const = 0;
};

// Deterministic offline backend: each lowercase word token maps to a seeded
// pseudo-random vector and a text is the sum of its token vectors, so texts
// sharing words are similar. Portable across platforms (splitmix64 only).
class HashBackend : public Backend {
 public:
  HashBackend(std::size_t dimension, std::uint64_t seed);
  std::vector<std::vector<double>> embed_batch(std::string_view model_id,
                                               std::span<const std::string> texts) override;
  std::string version() const override;

 private:
  std::size_t dimension_;
  std::uint64_t seed_;
};

// Reads `embeddings.fixture.jsonl`: {"model_id", "key", "vector"} per line,
// where key = content_key(text).
class FixtureBackend : public Backend {
 public:
  explicit FixtureBackend(const std::filesystem::path& path);
  std::vector<std::vector<double>> embed_batch(std::string_view model_id,
                                               std::span<const std::string> texts) override;
  std::string version() const override;

  static std::string content_key(std::string_view text);
  // One fixture line for (model, text, vector).
  static std::string fixture_line(std::string_view model_id, std::string_view text,
                                  std::span<const double> vector);

 private:
  std::map<std::pair<std::string, std::string>, std::vector<double>> table_;
  std::string digest_;
};

// POST {model_id, texts} -> {vectors} against `endpoint` (http://host:port/path).
class HttpBackend : public Backend {
 public:
  HttpBackend(std::string endpoint, std::size_t batch_size = 64, std::size_t max_in_flight = 4);
  std::vector<std::vector<double>> embed_batch(std::string_view model_id,
                                               std::span<const std::string> texts) override;
  std::string version() const override;

 private:
  std::string endpoint_;
  std::size_t batch_size_;
  std::size_t max_in_flight_;
};

struct BackendConfig {
  std::string kind = "hash";  // hash | fixture | http
  std::string endpoint;
  std::filesystem::path fixture;
  std::size_t dimension = 768;  // hash backend only
  std::uint64_t seed = 0;
  std::size_t max_in_flight = 4;
};

std::unique_ptr<Backend> make_backend(const BackendConfig& config);

class Embedder {
 public:
  // expected_dim == 0 accepts whatever the backend returns but pins it on first use.
  Embedder(Backend& backend, std::string model_id, bool unit_norm, std::size_t expected_dim = 0);

  EmbeddingVector embed(std::string_view text);
  // Embeds unique texts in one backend round; results keyed by text.
  std::map<std::string, EmbeddingVector> embed_all(std::span<const std::string> texts);

  const std::string& model_id() const { return model_id_; }
  bool unit_norm() const { return unit_norm_; }
  std::size_t dimension() const { return dim_; }

 private:
  EmbeddingVector finish(std::vector<double> raw);

  Backend& backend_;
  std::string model_id_;
  bool unit_norm_;
  std::size_t dim_;
  std::map<std::string, EmbeddingVector> cache_;
  std::mutex mutex_;
};

EmbeddingVector embed_text(Backend& backend, std::string_view text, std::string_view model_id,
                           bool unit_norm = true, std::size_t expected_dim = 0);

// Componentwise mean; re-normalized when the inputs are unit-norm. The result
// does not depend on input order (summation runs over a canonical ordering).
EmbeddingVector pool_repetitions(std::span<const EmbeddingVector> vectors);

enum class PoolingMode { Pooled, Single };
std::string_view to_string(PoolingMode m);
PoolingMode parse_pooling_mode(std::string_view s);

struct SystemCell {
  std::string system_id;
  std::string video_id;
  int qid = 0;
  friend auto operator<=>(const SystemCell&, const SystemCell&) = default;
};

struct MissingCell {
  SystemCell cell;
  std::string reason;
};

struct EmbeddedAnswerSet {
  std::map<SystemCell, EmbeddingVector> vectors;
  PoolingMode pooling_mode = PoolingMode::Pooled;
  std::string model_id;
  bool unit_norm = true;
  std::size_t dimension = 0;
  std::vector<MissingCell> missing;

  const EmbeddingVector* find(std::string_view system_id, std::string_view video_id, int qid) const;
  std::size_t cells_for(std::string_view system_id) const;

  // Line-delimited: one header line with metadata, then one line per cell.
  std::string serialize() const;
  static EmbeddedAnswerSet parse(std::string_view text);
};

// Pooled mode averages every non-ignored repetition of a cell; single mode takes
// the lowest-numbered non-ignored repetition. Cells with nothing usable are
// listed in `missing`.
EmbeddedAnswerSet build_embedded_set(const std::vector<ResponseRecord>& curated,
                                     const RunManifest& manifest, Embedder& embedder,
                                     PoolingMode mode);

}  // namespace vqalign::embedding
