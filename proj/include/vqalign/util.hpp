#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace vqalign::util {

// Lowercase hex SHA-256 digest.
std::string sha256_hex(std::string_view data);
std::string sha256_hex(std::span<const std::uint8_t> data);

std::string base64_encode(std::span<const std::uint8_t> data);
std::vector<std::uint8_t> base64_decode(std::string_view text);

std::string read_file(const std::filesystem::path& path);
std::vector<std::uint8_t> read_binary(const std::filesystem::path& path);

// Writes only when the on-disk bytes differ. Returns true if the file was written.
bool write_if_changed(const std::filesystem::path& path, std::string_view content);

std::string to_lower(std::string_view s);
std::string trim(std::string_view s);

struct UrlParts {
  std::string base;  // scheme://host[:port]
  std::string path;
};
// Throws ConfigError when there is no scheme.
UrlParts split_url(const std::string& url);

// UTC now as 2026-01-01T00:00:00Z.
std::string iso8601_now();

// Shortest decimal form that round-trips through strtod.
std::string format_double(double v);

}  // namespace vqalign::util
