#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vprobe/io.hpp"
#include "vprobe/question_bank.hpp"

namespace vprobe {

enum class LabelScheme { Letters, Digits, Custom };

/// Labeling scheme plus display permutation: display slot j shows canonical option order[j].
struct OptionVariant {
  std::string id;
  std::vector<std::string> labels;
  std::vector<std::size_t> order;
  LabelScheme scheme = LabelScheme::Custom;

  std::size_t size() const { return labels.size(); }
};

/// Value-neutral worked example shown before the real question.
struct ShotExample {
  std::string question;
  std::vector<std::string> options;
  std::size_t answer = 0;
};

struct PromptStyle {
  std::string id;
  std::string instruction;
  std::optional<std::string> response_prefix;
  std::optional<ShotExample> shot;
};

inline constexpr std::string_view kGroupPlaceholder = "{group}";
inline constexpr std::string_view kDefaultPersonaTemplate = "You are an average person from {group}.";

struct Persona {
  std::string group;
  std::string template_text{kDefaultPersonaTemplate};
};

struct RenderedPrompt {
  std::string text;
  std::map<std::string, std::size_t> label_map;  // label -> canonical option index
  std::vector<std::string> valid_labels;         // in display order
  std::vector<std::string> answer_sequences;     // canonical order, "<label>. <option text>"

  std::string question_id;
  std::string style_id;
  std::string variant_id;
  std::optional<std::string> persona;

  std::size_t size() const { return answer_sequences.size(); }
  /// Label displayed for canonical option i.
  const std::string& label_for(std::size_t canonical) const;
};

std::vector<std::string> letter_labels(std::size_t k);
/// Single-digit labels 0..k-1; k must be at most 10.
std::vector<std::string> digit_labels(std::size_t k);

OptionVariant identity_variant(std::vector<std::string> labels, std::string id, LabelScheme scheme = LabelScheme::Custom);
/// Same labels, display order reversed.
OptionVariant reversed(const OptionVariant& v);
void validate_variant(const OptionVariant& v);

/// Identity letters, reversed letters, identity digits.
std::vector<OptionVariant> standard_variants(std::size_t k);
/// Looks up one of the standard variant ids ("letters", "letters_reversed", "digits").
OptionVariant standard_variant(std::string_view id, std::size_t k);
const std::vector<std::string>& standard_variant_ids();

void validate_style(const PromptStyle& s);
/// The default, prefixed and oneshot styles.
const std::vector<PromptStyle>& builtin_styles();
PromptStyle style_from_json(const json& j, const std::string& context);

void validate_persona_template(std::string_view template_text);
std::string render_persona(std::string_view template_text, std::string_view group);
inline std::string render_persona(const Persona& p) { return render_persona(p.template_text, p.group); }

RenderedPrompt render(const ValueQuestion& q, const PromptStyle& style, const OptionVariant& variant,
                      const std::optional<Persona>& persona = std::nullopt);

}  // namespace vprobe
