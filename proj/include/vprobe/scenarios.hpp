#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vprobe/backend.hpp"
#include "vprobe/question_bank.hpp"

namespace vprobe {

// Substrings that identify each prompt kind. The mock backend dispatches on them.
inline constexpr std::string_view kGenerationMarker = "Situation_i:";
inline constexpr std::string_view kVerificationMarker = "Your job is to verify the correctness";
inline constexpr std::string_view kRatingMarker = "On a scale of 0 to 10";

/// Scene-generation request for one question: task instructions, one worked example, then
/// "<stem> Person A: <low pole> Person B: <high pole>".
std::string scene_generation_prompt(const ValueQuestion& q);
/// Self-critic request asking Q1..Q4 about one generated record.
std::string verification_prompt(const ValueQuestion& q, const ScenarioRecord& s);
/// Action rating request on a 0-10 scale.
std::string rating_prompt(std::string_view situation, std::string_view action);

struct ParsedScenarios {
  std::vector<ScenarioRecord> records;
  std::vector<std::string> notes;  // one per dropped block
};

/// Parses "Situation_i / ActionA_i / ActionB_i" blocks. Incomplete blocks are dropped with a note.
/// ActionA implies the low pole, ActionB the high pole. Records come back unverified.
ParsedScenarios parse_generated_scenarios(std::string_view response, const ValueQuestion& q);

struct CriticVerdict {
  bool parsed = false;
  std::array<std::optional<bool>, 4> answers{};
  bool all_yes() const;
};

/// Reads {Q1..Q4: Yes/No}. Accepts strict JSON or the unquoted-key form; anything else is unparsed.
CriticVerdict parse_critic_response(std::string_view text);

/// First number in [0, 10] in the text (integers or decimals), nullopt when none.
std::optional<double> extract_rating(std::string_view text);

/// Locates "<prefix>" at a line start and returns the rest of that line.
std::optional<std::string> line_value(std::string_view text, std::string_view prefix);

struct GenerationOutcome {
  std::vector<ScenarioRecord> records;
  std::vector<std::string> notes;
  std::size_t questions_failed = 0;
};

/// One generation request per question; per-question failures are recorded, not thrown.
GenerationOutcome generate_scenarios(const QuestionBank& bank, Backend& generator, double temperature = 1.0,
                                     int max_tokens = 2048);

struct FilterOutcome {
  std::vector<ScenarioRecord> kept;  // verified == true
  std::size_t dropped = 0;           // critic said No to some question
  std::size_t unverifiable = 0;      // critic response could not be parsed or the call failed
};

FilterOutcome filter_scenarios(const std::vector<ScenarioRecord>& records, const QuestionBank& bank, Backend& critic);

enum class Slot { A, B };
std::string_view to_string(Slot s);

struct ActionRating {
  std::string model;
  std::string scenario_id;
  Slot slot = Slot::A;
  double score = 0.0;
  std::string raw;
  bool valid = false;
};

json to_json(const ActionRating& r);
ActionRating rating_from_json(const json& j, const std::string& context);

struct RatingSettings {
  int n = 1;
  double temperature = 0.0;
  int max_tokens = 16;
};

/// Samples the rating prompt for one action; one ActionRating per sample.
std::vector<ActionRating> rate_action(const ScenarioRecord& scenario, const std::string& scenario_id, Slot slot,
                                      Backend& backend, const RatingSettings& settings = {});

}  // namespace vprobe
