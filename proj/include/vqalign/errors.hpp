#pragma once

#include <stdexcept>
#include <string>

namespace vqalign {

// Malformed input: manifest/response schema violations, bad option values.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Run configuration is inconsistent (unknown backend, dimension mismatch...).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A pipeline stage was asked to run before its upstream artifacts exist.
class DependencyError : public std::runtime_error {
 public:
  DependencyError(std::string stage, const std::string& what)
      : std::runtime_error(what), stage_(std::move(stage)) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

// Network or backend failure (embedding server, provider API, missing replay entry).
class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Provider request could not be assembled (frame caps, empty payloads).
class PayloadError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Clip source missing or not decodable as frames or video.
class DecodeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Numerical precondition failed (empty inputs, misaligned Gramians, degenerate pools).
class ComputeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace vqalign
