#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "vprobe/backend.hpp"
#include "vprobe/question_bank.hpp"

namespace vprobe {

/// Applies when the prompt contains `contains` (e.g. the prefixed style's response starter).
struct StyleRule {
  std::string contains;
  bool reverse = false;                           // mirror the distribution across the scale
  double tilt = 0.0;                              // multiply p_i by exp(tilt * i), renormalize
  std::map<std::string, Distribution> replace;    // per-question replacement distribution
};

enum class PersonaTarget {
  Reference,      // the group's human reference distribution
  Option,         // one-hot at `option` (negative counts from the end)
  Explicit,       // per-question vectors in `probs`
  AwayFromReference,  // one-hot at the end of the scale opposite the reference mean
};

/// When the prompt carries a persona for `group`: p <- (1 - strength) * p + strength * target.
struct PersonaRule {
  std::string group;
  PersonaTarget target = PersonaTarget::Reference;
  long option = 0;
  std::map<std::string, Distribution> probs;
  double strength = 1.0;
};

enum class AnswerFormat { Clean, Verbose, Labeled, Mixed };
enum class RatingMode { Constant, Linear, Random };

struct RatingBehavior {
  RatingMode mode = RatingMode::Constant;
  double value = 5.0;  // Constant mode
};

struct GeneratorBehavior {
  int per_question = 10;
  std::vector<std::string> omit;  // tags to leave out, e.g. "ActionB_7"
};

struct CriticBehavior {
  std::string reject_when_contains;  // situations containing this get a "No"
  int reject_question = 2;           // which of Q1..Q4 is answered "No"
  bool prose = false;                // answer in prose instead of JSON
};

/// Deterministic simulated model.
///
/// For a multiple-choice prompt the mock recovers the question (by stem) and the display mapping
/// (from "label. text" lines), then derives one distribution per condition:
/// base distribution -> style rules -> persona rules -> label-token bias. All three primitives
/// read that single distribution.
struct MockModelSpec {
  std::string model;
  std::uint64_t seed = 0;
  std::map<std::string, Distribution> distributions;
  bool uniform_default = false;  // questions without an entry: uniform, else seeded random
  double label_mass = 0.9;       // share of first-token mass on label tokens
  double space_fraction = 0.25;  // share of a label's mass on its leading-space form
  std::map<std::string, double> label_bias;  // additive logit bias per label symbol
  std::vector<StyleRule> style_rules;
  std::vector<PersonaRule> persona_rules;
  AnswerFormat format = AnswerFormat::Clean;
  double refusal_rate = 0.0;
  std::optional<double> tail_token_logprob;  // logprob of continuation tokens after the first
  bool supports_sequence = true;
  RatingBehavior rating;
  GeneratorBehavior generator;
  CriticBehavior critic;

  void validate() const;
};

MockModelSpec mock_spec_from_json(const json& j, const std::string& context);
json to_json(const MockModelSpec& spec);

struct MockContext {
  QuestionBank bank;
  ReferenceMap references;
  std::vector<ScenarioRecord> scenarios;
};

/// Condition the mock read from a multiple-choice prompt.
struct MockReading {
  const ValueQuestion* question = nullptr;
  std::vector<std::string> labels;             // display order
  std::vector<std::size_t> canonical;          // display slot -> canonical option
  std::optional<std::string> persona;
  Distribution canonical_probs;                // after style and persona rules, before label bias
  std::vector<double> display_probs;           // after label bias, display order
};

class MockBackend : public Backend {
 public:
  MockBackend(MockModelSpec spec, MockContext context, std::shared_ptr<ResponseCache> cache = nullptr,
              int max_parallel = 4, int top_logprobs = 20);

  const MockModelSpec& spec() const { return spec_; }
  /// Base distribution for a question before any condition is applied.
  Distribution base_distribution(const ValueQuestion& q) const;
  /// Interprets a multiple-choice prompt; throws ValidationError when it cannot.
  MockReading read_prompt(const std::string& prompt) const;

 protected:
  json raw_top_logprobs(const std::string& prompt, int top_k) override;
  json raw_sequence(const std::string& prompt, const std::string& continuation) override;
  json raw_sample(const std::string& prompt, int n, double temperature, int max_tokens, std::uint64_t seed) override;
  int top_k() const override { return top_logprobs_; }
  std::string identity() const override { return identity_; }

 private:
  std::string answer_text(const MockReading& reading, std::size_t slot, AnswerFormat format) const;
  std::string rating_text(const std::string& prompt, std::uint64_t seed) const;
  std::string generation_text(const std::string& prompt) const;
  std::string critic_text(const std::string& prompt) const;
  const ValueQuestion* find_question(const std::string& prompt, std::size_t* position = nullptr) const;

  MockModelSpec spec_;
  MockContext context_;
  int top_logprobs_;
  std::string identity_;
};

/// Mock tokenizer: an optional single leading space joined to the following word or punctuation mark.
std::vector<std::string> mock_tokenize(std::string_view text);

}  // namespace vprobe
