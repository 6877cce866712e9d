#pragma once

#include <cstddef>
#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>

#include "vprobe/io.hpp"

namespace vprobe {

/// Content-addressed store of raw backend responses.
///
/// Backed by an append-only JSONL file, one record per line:
/// {"key", "primitive", "payload_hash", "response", "ts"}. Corrupt lines are skipped on load
/// with a warning on stderr. Without a path the cache lives in memory only.
/// Lookups and inserts are thread-safe; file appends go through a single mutex.
class ResponseCache {
 public:
  ResponseCache() = default;
  explicit ResponseCache(std::filesystem::path file);

  ResponseCache(const ResponseCache&) = delete;
  ResponseCache& operator=(const ResponseCache&) = delete;

  std::optional<json> get(const std::string& key) const;
  /// First write for a key wins; later writes of the same key are ignored.
  void put(const std::string& key, const std::string& primitive, const std::string& payload_hash, const json& response);

  std::size_t size() const;
  std::size_t corrupt_lines() const { return corrupt_lines_; }
  const std::optional<std::filesystem::path>& file() const { return file_; }

 private:
  std::optional<std::filesystem::path> file_;
  mutable std::mutex mu_;
  std::unordered_map<std::string, json> entries_;
  std::size_t corrupt_lines_ = 0;
};

struct CacheVerifyReport {
  std::size_t records = 0;
  std::size_t corrupt = 0;
  std::size_t duplicates = 0;   // same key stored more than once with identical response
  std::size_t conflicts = 0;    // same key stored with different responses
  bool ok() const { return corrupt == 0 && conflicts == 0; }
};

/// Scans a cache file without loading it into a backend.
CacheVerifyReport verify_cache_file(const std::filesystem::path& file);

}  // namespace vprobe
