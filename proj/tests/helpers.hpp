#pragma once

#include <unistd.h>

#include <atomic>
#include <filesystem>
#include <string>

#include "vprobe/mock_backend.hpp"
#include "vprobe/question_bank.hpp"

namespace testutil {

class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("vprobe_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline vprobe::ValueQuestion question(std::string id, std::string stem, std::vector<std::string> options,
                                      std::string topic = "topic") {
  vprobe::ValueQuestion q;
  q.id = std::move(id);
  q.stem = std::move(stem);
  q.options = std::move(options);
  q.topic = std::move(topic);
  return q;
}

inline vprobe::ValueQuestion importance_question() {
  return question("Q001", "How important is work in your life?",
                  {"Very important", "Rather important", "Not very important", "Not at all important"}, "work");
}

inline vprobe::QuestionBank sample_bank() { return vprobe::load_question_bank(VPROBE_SAMPLE_DIR "/bank.jsonl"); }

inline vprobe::ReferenceMap sample_references(const vprobe::QuestionBank& bank) {
  return vprobe::load_references(VPROBE_SAMPLE_DIR "/references.jsonl", bank);
}

}  // namespace testutil
