#include "vprobe/io.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <fstream>
#include <sstream>

#include <openssl/evp.h>

#include "vprobe/common.hpp"

namespace vprobe {

std::string where(const std::filesystem::path& path, std::size_t line) {
  if (line == 0) return path.string();
  return path.string() + ":" + std::to_string(line);
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<JsonRecord> read_json_records(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  std::vector<JsonRecord> out;

  auto first = std::find_if(text.begin(), text.end(), [](unsigned char c) { return !std::isspace(c); });
  if (first != text.end() && *first == '[') {
    json doc;
    try {
      doc = json::parse(text);
    } catch (const json::parse_error& e) {
      throw SchemaError(where(path, 0) + ": invalid JSON array: " + e.what());
    }
    for (auto& item : doc) out.push_back({0, std::move(item)});
    return out;
  }

  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); })) continue;
    try {
      out.push_back({lineno, json::parse(line)});
    } catch (const json::parse_error& e) {
      throw SchemaError(where(path, lineno) + ": invalid JSON record: " + e.what());
    }
  }
  return out;
}

void write_text_file(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("cannot write file: " + path.string());
  out << content;
}

void write_json_lines(const std::filesystem::path& path, const std::vector<json>& records) {
  std::string buf;
  for (const auto& r : records) {
    buf += r.dump();
    buf += '\n';
  }
  write_text_file(path, buf);
}

void require_known_keys(const json& obj, std::initializer_list<std::string_view> allowed, const std::string& context) {
  if (!obj.is_object()) throw SchemaError(context + ": expected a JSON object");
  for (const auto& [key, _] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw SchemaError(context + ": unknown key '" + key + "'");
    }
  }
}

std::string sha256_hex(std::string_view data) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xF]);
  }
  return out;
}

std::uint64_t stable_seed(std::string_view data) {
  const std::string hex = sha256_hex(data);
  return std::stoull(hex.substr(0, 16), nullptr, 16);
}

}  // namespace vprobe
