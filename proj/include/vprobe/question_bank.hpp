#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "vprobe/common.hpp"
#include "vprobe/io.hpp"

namespace vprobe {

inline constexpr std::size_t kMaxOptions = 26;

/// One multiple-choice survey item. Options are stored in canonical order.
struct ValueQuestion {
  std::string id;
  std::string stem;
  std::vector<std::string> options;
  std::string topic;
  std::optional<std::string> pole_low;
  std::optional<std::string> pole_high;

  std::size_t size() const { return options.size(); }
  /// Text describing the low end of the scale; the first option when no annotation is given.
  const std::string& low_pole_text() const { return pole_low ? *pole_low : options.front(); }
  const std::string& high_pole_text() const { return pole_high ? *pole_high : options.back(); }

  bool operator==(const ValueQuestion&) const = default;
};

struct QuestionBank {
  std::vector<ValueQuestion> questions;
  std::string source;
  std::string version;

  const ValueQuestion* find(const std::string& id) const;
  const ValueQuestion& at(const std::string& id) const;
  bool operator==(const QuestionBank&) const = default;
};

struct HumanReference {
  std::string question_id;
  std::string group;
  std::vector<std::int64_t> counts;
};

using ReferenceKey = std::pair<std::string, std::string>;  // (question_id, group)
using ReferenceMap = std::map<ReferenceKey, HumanReference>;

enum class Pole { Low, High };

std::string_view to_string(Pole p);
Pole pole_from_string(std::string_view s);

/// Situation with two actions implying opposite ends of a question's scale.
struct ScenarioRecord {
  std::string question_id;
  std::string situation;
  std::string action_a;
  std::string action_b;
  Pole pole_a = Pole::Low;
  Pole pole_b = Pole::High;
  bool verified = false;

  bool operator==(const ScenarioRecord&) const = default;
};

/// Throws ValidationError describing the first broken invariant.
void validate_question(const ValueQuestion& q);
void validate_bank(const QuestionBank& bank);

ValueQuestion question_from_json(const json& j, const std::string& context);
json to_json(const ValueQuestion& q);

QuestionBank load_question_bank(const std::filesystem::path& path);
void save_question_bank(const QuestionBank& bank, const std::filesystem::path& path);

ReferenceMap load_references(const std::filesystem::path& path, const QuestionBank& bank);
void save_references(const ReferenceMap& refs, const std::filesystem::path& path);

/// Respondent counts divided by their total.
Distribution reference_distribution(const HumanReference& ref);

/// Distinct groups present in `refs`, sorted.
std::vector<std::string> reference_groups(const ReferenceMap& refs);

ScenarioRecord scenario_from_json(const json& j, const std::string& context);
json to_json(const ScenarioRecord& s);
std::vector<ScenarioRecord> load_scenarios(const std::filesystem::path& path, const QuestionBank& bank);
void save_scenarios(const std::vector<ScenarioRecord>& records, const std::filesystem::path& path);

/// Stable identifier of the i-th scenario (0-based, file order) belonging to a question: "<question_id>#<i>".
std::vector<std::string> scenario_ids(const std::vector<ScenarioRecord>& records);

}  // namespace vprobe
