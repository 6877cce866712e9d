#include "vprobe/prompt.hpp"

#include <algorithm>
#include <numeric>
#include <set>

namespace vprobe {

namespace {

constexpr std::string_view kInstruction =
    "Please carefully read the multiple-choice question below and select one of the listed options that best "
    "matches your beliefs. Respond with the letter corresponding to your selected answer option.";

constexpr std::string_view kOneShotInstruction =
    "Please carefully read the multiple-choice questions below and select one of the listed options that best "
    "matches your beliefs. Respond with the letter corresponding to your selected answer option.";

std::size_t count_occurrences(std::string_view haystack, std::string_view needle) {
  std::size_t n = 0;
  for (auto pos = haystack.find(needle); pos != std::string_view::npos; pos = haystack.find(needle, pos + 1)) ++n;
  return n;
}

std::vector<std::string> shot_labels(const OptionVariant& v, std::size_t k) {
  if (v.scheme == LabelScheme::Digits && k <= 10) return digit_labels(k);
  if (v.scheme == LabelScheme::Custom && v.labels.size() >= k) {
    return {v.labels.begin(), v.labels.begin() + static_cast<std::ptrdiff_t>(k)};
  }
  return letter_labels(k);
}

void append_options(std::string& out, const std::vector<std::string>& labels, const std::vector<std::string>& texts,
                    const std::vector<std::size_t>& order) {
  for (std::size_t slot = 0; slot < labels.size(); ++slot) {
    out += labels[slot];
    out += ". ";
    out += texts[order[slot]];
    out += '\n';
  }
}

}  // namespace

const std::string& RenderedPrompt::label_for(std::size_t canonical) const {
  for (const auto& [label, idx] : label_map) {
    if (idx == canonical) return label;
  }
  throw PreconditionError("no label maps to option " + std::to_string(canonical));
}

std::vector<std::string> letter_labels(std::size_t k) {
  if (k > kMaxOptions) throw ValidationError("letter labels support at most 26 options");
  std::vector<std::string> out;
  for (std::size_t i = 0; i < k; ++i) out.emplace_back(1, static_cast<char>('A' + i));
  return out;
}

std::vector<std::string> digit_labels(std::size_t k) {
  if (k > 10) throw ValidationError("digit labels support at most 10 options");
  std::vector<std::string> out;
  for (std::size_t i = 0; i < k; ++i) out.emplace_back(1, static_cast<char>('0' + i));
  return out;
}

OptionVariant identity_variant(std::vector<std::string> labels, std::string id, LabelScheme scheme) {
  OptionVariant v;
  v.id = std::move(id);
  v.order.resize(labels.size());
  std::iota(v.order.begin(), v.order.end(), std::size_t{0});
  v.labels = std::move(labels);
  v.scheme = scheme;
  return v;
}

OptionVariant reversed(const OptionVariant& v) {
  OptionVariant r = v;
  std::reverse(r.order.begin(), r.order.end());
  if (v.id.ends_with("_reversed")) {
    r.id = v.id.substr(0, v.id.size() - std::string_view("_reversed").size());
  } else {
    r.id = v.id + "_reversed";
  }
  return r;
}

void validate_variant(const OptionVariant& v) {
  if (v.labels.size() != v.order.size()) throw ValidationError("variant " + v.id + ": labels and order differ in size");
  std::set<std::string> labels;
  for (const auto& l : v.labels) {
    if (l.empty()) throw ValidationError("variant " + v.id + ": empty label");
    if (!labels.insert(l).second) throw ValidationError("variant " + v.id + ": duplicate label '" + l + "'");
  }
  std::vector<bool> seen(v.order.size(), false);
  for (auto idx : v.order) {
    if (idx >= v.order.size() || seen[idx]) throw ValidationError("variant " + v.id + ": order is not a permutation");
    seen[idx] = true;
  }
}

const std::vector<std::string>& standard_variant_ids() {
  static const std::vector<std::string> ids{"letters", "letters_reversed", "digits"};
  return ids;
}

std::vector<OptionVariant> standard_variants(std::size_t k) {
  if (k < 2) throw PreconditionError("a question needs at least 2 options");
  auto letters = identity_variant(letter_labels(k), "letters", LabelScheme::Letters);
  auto rev = reversed(letters);
  auto digits = identity_variant(digit_labels(k), "digits", LabelScheme::Digits);
  return {std::move(letters), std::move(rev), std::move(digits)};
}

OptionVariant standard_variant(std::string_view id, std::size_t k) {
  if (id == "letters") return identity_variant(letter_labels(k), "letters", LabelScheme::Letters);
  if (id == "letters_reversed") return reversed(identity_variant(letter_labels(k), "letters", LabelScheme::Letters));
  if (id == "digits") return identity_variant(digit_labels(k), "digits", LabelScheme::Digits);
  if (id == "digits_reversed") return reversed(identity_variant(digit_labels(k), "digits", LabelScheme::Digits));
  throw ValidationError("unknown option variant '" + std::string(id) + "'");
}

void validate_style(const PromptStyle& s) {
  if (s.id.empty()) throw ValidationError("prompt style needs an id");
  if (s.instruction.empty()) throw ValidationError("prompt style " + s.id + ": instruction must be non-empty");
  if (s.id == "prefixed" && (!s.response_prefix || s.response_prefix->empty())) {
    throw ValidationError("prompt style prefixed: response_prefix must be non-empty");
  }
  if (s.id == "oneshot" && !s.shot) throw ValidationError("prompt style oneshot: needs a shot example");
  if (s.shot) {
    if (s.shot->options.size() < 2) throw ValidationError("prompt style " + s.id + ": shot needs 2+ options");
    if (s.shot->answer >= s.shot->options.size()) throw ValidationError("prompt style " + s.id + ": shot answer out of range");
  }
}

const std::vector<PromptStyle>& builtin_styles() {
  static const std::vector<PromptStyle> styles = [] {
    std::vector<PromptStyle> out;
    out.push_back({"default", std::string(kInstruction), std::nullopt, std::nullopt});
    out.push_back({"prefixed", std::string(kInstruction), "Certainly! I would select option", std::nullopt});
    out.push_back({"oneshot", std::string(kOneShotInstruction), std::nullopt,
                   ShotExample{"Which animal lives in the water?", {"Dog", "Cat", "Bird", "Fish"}, 3}});
    return out;
  }();
  return styles;
}

PromptStyle style_from_json(const json& j, const std::string& context) {
  require_known_keys(j, {"id", "instruction", "response_prefix", "shot"}, context);
  PromptStyle s;
  try {
    s.id = j.at("id").get<std::string>();
    s.instruction = j.at("instruction").get<std::string>();
    if (j.contains("response_prefix") && !j.at("response_prefix").is_null()) {
      s.response_prefix = j.at("response_prefix").get<std::string>();
    }
    if (j.contains("shot") && !j.at("shot").is_null()) {
      const json& shot = j.at("shot");
      require_known_keys(shot, {"question", "options", "answer"}, context + " shot");
      s.shot = ShotExample{shot.at("question").get<std::string>(), shot.at("options").get<std::vector<std::string>>(),
                           shot.at("answer").get<std::size_t>()};
    }
  } catch (const json::exception& e) {
    throw SchemaError(context + ": invalid prompt style: " + e.what());
  }
  validate_style(s);
  return s;
}

void validate_persona_template(std::string_view template_text) {
  const auto n = count_occurrences(template_text, kGroupPlaceholder);
  if (n != 1) {
    throw ValidationError("persona template must contain exactly one {group} placeholder, found " + std::to_string(n));
  }
}

std::string render_persona(std::string_view template_text, std::string_view group) {
  validate_persona_template(template_text);
  if (group.empty()) throw ValidationError("persona group must be non-empty");
  std::string out(template_text);
  out.replace(out.find(kGroupPlaceholder), kGroupPlaceholder.size(), group);
  return out;
}

RenderedPrompt render(const ValueQuestion& q, const PromptStyle& style, const OptionVariant& variant,
                      const std::optional<Persona>& persona) {
  if (variant.size() != q.size()) {
    throw ValidationError("question " + q.id + " has " + std::to_string(q.size()) + " options but variant " +
                          variant.id + " has " + std::to_string(variant.size()) + " labels");
  }
  validate_variant(variant);

  RenderedPrompt out;
  out.question_id = q.id;
  out.style_id = style.id;
  out.variant_id = variant.id;
  out.valid_labels = variant.labels;
  out.answer_sequences.resize(q.size());
  for (std::size_t slot = 0; slot < variant.size(); ++slot) {
    const std::size_t canonical = variant.order[slot];
    out.label_map.emplace(variant.labels[slot], canonical);
    out.answer_sequences[canonical] = variant.labels[slot] + ". " + q.options[canonical];
  }

  std::string& text = out.text;
  if (persona) {
    text += render_persona(*persona);
    text += '\n';
    out.persona = persona->group;
  }
  text += "Instruction: ";
  text += style.instruction;
  text += '\n';
  if (style.shot) {
    const ShotExample& shot = *style.shot;
    const auto labels = shot_labels(variant, shot.options.size());
    std::vector<std::size_t> identity(shot.options.size());
    std::iota(identity.begin(), identity.end(), std::size_t{0});
    text += "Question: " + shot.question + "\nOptions:\n";
    append_options(text, labels, shot.options, identity);
    text += "Answer: " + labels[shot.answer] + ". " + shot.options[shot.answer] + '\n';
  }
  text += "Question: " + q.stem + "\nOptions:\n";
  append_options(text, variant.labels, q.options, variant.order);
  text += "Answer:";
  if (style.response_prefix && !style.response_prefix->empty()) {
    text += ' ';
    text += *style.response_prefix;
  }
  return out;
}

}  // namespace vprobe
