#include "vprobe/cache.hpp"

#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>

#include "vprobe/common.hpp"

namespace vprobe {

namespace {

bool is_valid_record(const json& j) {
  return j.is_object() && j.contains("key") && j["key"].is_string() && j.contains("primitive") &&
         j["primitive"].is_string() && j.contains("payload_hash") && j.contains("response") && j.contains("ts");
}

template <typename Fn>
void for_each_line(const std::filesystem::path& file, Fn&& fn) {
  std::ifstream in(file, std::ios::binary);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    fn(lineno, line);
  }
}

}  // namespace

ResponseCache::ResponseCache(std::filesystem::path file) : file_(std::move(file)) {
  if (!std::filesystem::exists(*file_)) return;
  for_each_line(*file_, [&](std::size_t lineno, const std::string& line) {
    json rec = json::parse(line, nullptr, false);
    if (rec.is_discarded() || !is_valid_record(rec)) {
      ++corrupt_lines_;
      std::cerr << "warning: " << where(*file_, lineno) << ": skipping corrupt cache record\n";
      return;
    }
    entries_.try_emplace(rec["key"].get<std::string>(), std::move(rec["response"]));
  });
}

std::optional<json> ResponseCache::get(const std::string& key) const {
  std::lock_guard lock(mu_);
  auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return std::optional<json>(std::in_place, it->second);
}

void ResponseCache::put(const std::string& key, const std::string& primitive, const std::string& payload_hash,
                        const json& response) {
  std::lock_guard lock(mu_);
  if (!entries_.try_emplace(key, response).second) return;
  if (!file_) return;
  const auto ts = std::chrono::duration_cast<std::chrono::seconds>(
                      std::chrono::system_clock::now().time_since_epoch())
                      .count();
  json rec = {{"key", key}, {"primitive", primitive}, {"payload_hash", payload_hash}, {"response", response}, {"ts", ts}};
  if (file_->has_parent_path()) std::filesystem::create_directories(file_->parent_path());
  std::ofstream out(*file_, std::ios::binary | std::ios::app);
  if (!out) throw Error("cannot append to cache file " + file_->string());
  out << rec.dump() << '\n';
}

std::size_t ResponseCache::size() const {
  std::lock_guard lock(mu_);
  return entries_.size();
}

CacheVerifyReport verify_cache_file(const std::filesystem::path& file) {
  if (!std::filesystem::exists(file)) throw ValidationError("cache file not found: " + file.string());
  CacheVerifyReport report;
  std::unordered_map<std::string, std::string> seen;
  for_each_line(file, [&](std::size_t, const std::string& line) {
    json rec = json::parse(line, nullptr, false);
    if (rec.is_discarded() || !is_valid_record(rec)) {
      ++report.corrupt;
      return;
    }
    ++report.records;
    const std::string dumped = rec["response"].dump();
    auto [it, inserted] = seen.try_emplace(rec["key"].get<std::string>(), dumped);
    if (!inserted) {
      if (it->second == dumped) {
        ++report.duplicates;
      } else {
        ++report.conflicts;
      }
    }
  });
  return report;
}

}  // namespace vprobe
