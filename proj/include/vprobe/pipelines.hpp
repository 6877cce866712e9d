#pragma once

#include <compare>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vprobe/backend.hpp"
#include "vprobe/metrics.hpp"
#include "vprobe/prompt.hpp"
#include "vprobe/question_bank.hpp"
#include "vprobe/scenarios.hpp"
#include "vprobe/scoring.hpp"

namespace vprobe {

struct SamplingSettings {
  int n = 10;
  double temperature = 1.0;
  int max_tokens = 16;
};

/// Probing grid. Every point is probed once without a persona and once per group in `personas`.
struct RunGrid {
  std::vector<Method> methods{Method::Token, Method::Sequence, Method::Text};
  std::vector<PromptStyle> styles = builtin_styles();
  std::vector<std::string> variants = standard_variant_ids();
  std::vector<std::string> personas;
  std::string persona_template{kDefaultPersonaTemplate};
  SamplingSettings sampling;

  void validate() const;
  /// Conditions per question: styles x variants x (1 + personas).
  std::size_t conditions() const { return styles.size() * variants.size() * (1 + personas.size()); }
};

/// Persona value used in keys and reports for generic prompts.
inline constexpr std::string_view kNoPersona = "";

struct RepKey {
  std::string model;
  Method method = Method::Token;
  std::string question_id;
  std::string style;
  std::string variant;
  std::string persona;  // kNoPersona for generic prompts

  auto operator<=>(const RepKey&) const = default;
};

RepKey key_of(const ValueRepresentation& rep);

class RepStore {
 public:
  /// Throws ValidationError on a duplicate key or an invalid probability vector.
  void add(ValueRepresentation rep);
  const ValueRepresentation* find(const RepKey& key) const;
  std::size_t size() const { return reps_.size(); }
  std::size_t count(Method m) const;
  const std::map<RepKey, ValueRepresentation>& all() const { return reps_; }

 private:
  std::map<RepKey, ValueRepresentation> reps_;
};

std::vector<json> to_json_records(const RepStore& store);
RepStore load_reps(const std::filesystem::path& path);

struct GridFailure {
  RepKey key;
  std::string error;
  bool transport = false;  // endpoint unreachable after retries
};

struct CollectOutcome {
  RepStore store;
  std::vector<GridFailure> failures;
  std::size_t expected = 0;  // grid points x methods
};

/// Probes every (question, style, variant, persona, method) point. Failed points are recorded, not thrown.
CollectOutcome collect_reps(const RunGrid& grid, const QuestionBank& bank, Backend& backend);

/// Probes one rendered prompt with one method.
ValueRepresentation probe(const RenderedPrompt& rendered, Method method, Backend& backend,
                          const SamplingSettings& sampling = {});

struct PairRecord {
  std::string model;
  Method method = Method::Token;
  std::string question_id;
  std::string condition_a;
  std::string condition_b;
  int mismatch = 0;
  double js_distance = 0.0;
  double js_divergence = 0.0;
};

struct RobustnessRow {
  std::string model;
  Method method = Method::Token;
  double mismatch_rate = 0.0;
  double mean_js_distance = 0.0;
  double mean_js_divergence = 0.0;
  std::size_t pairs = 0;
  std::size_t expected_pairs = 0;
};

struct RobustnessResult {
  std::vector<RobustnessRow> rows;
  std::vector<PairRecord> pairs;
  std::vector<std::string> notes;
};

/// Style pairs under the identity letter variant, generic prompts only.
RobustnessResult robustness_prompt(const RepStore& store, const std::string& identity_variant = "letters");
/// Variant pairs over style-averaged generic representations. Needs at least two variants.
RobustnessResult robustness_selection(const RepStore& store);

enum class AlignmentAggregation { AverageReps, AverageScores };
std::string_view to_string(AlignmentAggregation a);
AlignmentAggregation aggregation_from_string(std::string_view s);

struct AlignmentPair {
  double generic = 0.0;
  double persona = 0.0;
  double improvement() const { return persona - generic; }
};

/// Alignment of the generic and persona representation sets against one human distribution.
AlignmentPair alignment_pair(std::span<const Distribution> generic, std::span<const Distribution> persona,
                             const Distribution& human, AlignmentAggregation aggregation);

struct AlignmentDetail {
  std::string model;
  Method method = Method::Token;
  std::string group;
  std::string question_id;
  AlignmentPair value;
};

struct AlignmentRow {
  std::string model;
  Method method = Method::Token;
  std::string group;
  double alignment_generic = 0.0;
  double alignment_persona = 0.0;
  double improvement = 0.0;
  std::size_t questions = 0;
};

struct AlignmentResult {
  AlignmentAggregation aggregation = AlignmentAggregation::AverageReps;
  std::vector<AlignmentRow> rows;  // per group, plus group "all" averaged over questions and groups
  std::vector<AlignmentDetail> details;
  std::vector<std::string> notes;
};

AlignmentResult demographic_alignment(const RepStore& store, const ReferenceMap& refs,
                                      AlignmentAggregation aggregation = AlignmentAggregation::AverageReps);

struct RatingOutcome {
  std::vector<ActionRating> ratings;
  std::vector<std::string> notes;
};

/// Rates both actions of every verified scenario.
RatingOutcome collect_ratings(const std::vector<ScenarioRecord>& scenarios, Backend& backend,
                              const RatingSettings& settings = {});

std::vector<ActionRating> load_ratings(const std::filesystem::path& path);
void save_ratings(const std::vector<ActionRating>& ratings, const std::filesystem::path& path);

struct ActionPoint {
  std::string model;
  Method method = Method::Token;
  std::string scenario_id;
  Slot slot = Slot::A;
  double x = 0.0;  // probability weight of the action's pole
  double y = 0.0;  // mean valid rating
};

struct AgreementRow {
  std::string model;
  Method method = Method::Token;
  std::size_t n = 0;
  std::optional<Correlation> pearson;
  std::optional<Correlation> spearman;
  std::string error;
};

struct AgreementResult {
  std::vector<AgreementRow> rows;
  std::vector<ActionPoint> points;
  std::vector<std::string> notes;
};

/// Correlates pole weights of generic, style x variant averaged representations with action ratings.
AgreementResult action_agreement(const RepStore& store, const std::vector<ScenarioRecord>& scenarios,
                                 const std::vector<ActionRating>& ratings, const QuestionBank& bank);

}  // namespace vprobe
