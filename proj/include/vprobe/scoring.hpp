#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vprobe/backend.hpp"
#include "vprobe/common.hpp"
#include "vprobe/io.hpp"
#include "vprobe/prompt.hpp"

namespace vprobe {

struct Provenance {
  std::string model;
  std::string question_id;
  std::string style;
  std::string variant;
  std::optional<std::string> persona;
};

struct Diagnostics {
  std::size_t floored = 0;   // token method: candidate surface forms that were floored
  bool degenerate = false;   // token method: every candidate was floored
  std::size_t invalid = 0;   // text method: samples with no extractable label
  std::size_t samples = 0;   // text method: N
};

struct ValueRepresentation {
  Distribution probs;
  Method method = Method::Token;
  Provenance provenance;
  Diagnostics diagnostics;
};

json to_json(const ValueRepresentation& rep);
ValueRepresentation rep_from_json(const json& j, const std::string& context);

/// label -> accepted token strings.
using SurfaceFormSet = std::map<std::string, std::vector<std::string>>;

/// {label, " " + label}. Labels must be a single character.
std::vector<std::string> surface_forms(std::string_view label);
SurfaceFormSet surface_form_set(const RenderedPrompt& rendered);
/// Every surface form of every label, in display order.
std::vector<std::string> candidate_tokens(const RenderedPrompt& rendered);

/// Per label, sums exp(logprob) over its observed surface forms (floored forms count only when a label
/// has no observed form), maps labels to canonical order and renormalizes.
ValueRepresentation score_token(const TokenLogprobResult& result, const RenderedPrompt& rendered);

/// Inverse length-normalized perplexity, normalized over options. `scores` is in canonical order.
ValueRepresentation score_sequence(std::span<const SequenceScore> scores, const RenderedPrompt* rendered = nullptr);

/// Canonical option chosen by a free-text answer, or nullopt when no label can be read.
///
/// Tiers, first tier with any match wins:
///   1. a line starting with a label followed by '.', ')', ':', whitespace or end of line;
///   2. "(label)" anywhere;
///   3. the label as a standalone word in the first sentence.
/// Two distinct labels in the winning tier make the answer invalid.
std::optional<std::size_t> extract_label(std::string_view text, const RenderedPrompt& rendered);

/// n_i / N, where each invalid sample adds 1/K to every option.
ValueRepresentation score_text(std::span<const std::string> samples, const RenderedPrompt& rendered);

/// Index of the largest probability; ties go to the lowest index.
std::size_t majority_answer(std::span<const double> probs);
inline std::size_t majority_answer(const ValueRepresentation& rep) { return majority_answer(rep.probs); }

}  // namespace vprobe
