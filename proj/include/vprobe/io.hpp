#pragma once

#include <cstdint>
#include <filesystem>
#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace vprobe {

using json = nlohmann::json;

/// One parsed record with the 1-based line it came from (0 for array documents).
struct JsonRecord {
  std::size_t line = 0;
  json value;
};

/// Reads a line-oriented JSON file (one object per line, blank lines ignored).
/// A file whose first non-space character is '[' is parsed as a single JSON array instead.
/// Throws SchemaError naming the file and line on parse failure, ValidationError if the file is missing.
std::vector<JsonRecord> read_json_records(const std::filesystem::path& path);

/// Writes one compact JSON object per line.
void write_json_lines(const std::filesystem::path& path, const std::vector<json>& records);

/// Writes `content` to `path`, creating parent directories.
void write_text_file(const std::filesystem::path& path, std::string_view content);

std::string read_text_file(const std::filesystem::path& path);

/// "file:line" prefix for error messages.
std::string where(const std::filesystem::path& path, std::size_t line);

/// Throws SchemaError if `obj` has a key outside `allowed`.
void require_known_keys(const json& obj, std::initializer_list<std::string_view> allowed, const std::string& context);

/// Lowercase hex SHA-256 of `data`.
std::string sha256_hex(std::string_view data);

/// 64-bit seed derived from SHA-256; stable across platforms and runs.
std::uint64_t stable_seed(std::string_view data);

}  // namespace vprobe
