#include "vprobe/scoring.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <set>

namespace vprobe {

namespace {

void fill_provenance(ValueRepresentation& rep, const RenderedPrompt& rendered) {
  rep.provenance.question_id = rendered.question_id;
  rep.provenance.style = rendered.style_id;
  rep.provenance.variant = rendered.variant_id;
  rep.provenance.persona = rendered.persona;
}

bool is_word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    lines.push_back(text.substr(start, end - start));
    start = end + 1;
  }
  return lines;
}

std::string_view ltrim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  return s;
}

std::set<std::string> tier_line_initial(std::string_view text, const std::vector<std::string>& labels) {
  std::set<std::string> found;
  for (auto line : split_lines(text)) {
    line = ltrim(line);
    for (const auto& label : labels) {
      if (!line.starts_with(label)) continue;
      if (line.size() == label.size()) {
        found.insert(label);
        continue;
      }
      const char next = line[label.size()];
      if (next == '.' || next == ')' || next == ':' || std::isspace(static_cast<unsigned char>(next))) found.insert(label);
    }
  }
  return found;
}

std::set<std::string> tier_parenthesized(std::string_view text, const std::vector<std::string>& labels) {
  std::set<std::string> found;
  for (const auto& label : labels) {
    if (text.find("(" + label + ")") != std::string_view::npos) found.insert(label);
  }
  return found;
}

std::set<std::string> tier_first_sentence(std::string_view text, const std::vector<std::string>& labels) {
  text = ltrim(text);
  const auto end = text.find_first_of(".!?\n");
  const std::string_view sentence = text.substr(0, end);
  std::set<std::string> found;
  for (const auto& label : labels) {
    for (auto pos = sentence.find(label); pos != std::string_view::npos; pos = sentence.find(label, pos + 1)) {
      const bool left_ok = pos == 0 || !is_word_char(sentence[pos - 1]);
      const std::size_t after = pos + label.size();
      const bool right_ok = after >= sentence.size() || !is_word_char(sentence[after]);
      if (left_ok && right_ok) {
        found.insert(label);
        break;
      }
    }
  }
  return found;
}

}  // namespace

json to_json(const ValueRepresentation& rep) {
  json diag = json::object();
  if (rep.method == Method::Token) {
    diag["floored"] = rep.diagnostics.floored;
    diag["degenerate"] = rep.diagnostics.degenerate;
  } else if (rep.method == Method::Text) {
    diag["invalid"] = rep.diagnostics.invalid;
    diag["samples"] = rep.diagnostics.samples;
  }
  return {{"model", rep.provenance.model},
          {"question_id", rep.provenance.question_id},
          {"method", std::string(to_string(rep.method))},
          {"style", rep.provenance.style},
          {"variant", rep.provenance.variant},
          {"persona", rep.provenance.persona ? json(*rep.provenance.persona) : json(nullptr)},
          {"probs", rep.probs},
          {"diagnostics", diag}};
}

ValueRepresentation rep_from_json(const json& j, const std::string& context) {
  require_known_keys(j, {"model", "question_id", "method", "style", "variant", "persona", "probs", "diagnostics"},
                     context);
  ValueRepresentation rep;
  try {
    rep.provenance.model = j.value("model", "");
    rep.provenance.question_id = j.at("question_id").get<std::string>();
    rep.method = method_from_string(j.at("method").get<std::string>());
    rep.provenance.style = j.at("style").get<std::string>();
    rep.provenance.variant = j.at("variant").get<std::string>();
    if (j.contains("persona") && !j.at("persona").is_null()) rep.provenance.persona = j.at("persona").get<std::string>();
    rep.probs = j.at("probs").get<Distribution>();
    if (j.contains("diagnostics")) {
      const json& d = j.at("diagnostics");
      rep.diagnostics.floored = d.value("floored", std::size_t{0});
      rep.diagnostics.degenerate = d.value("degenerate", false);
      rep.diagnostics.invalid = d.value("invalid", std::size_t{0});
      rep.diagnostics.samples = d.value("samples", std::size_t{0});
    }
  } catch (const json::exception& e) {
    throw SchemaError(context + ": invalid representation record: " + e.what());
  }
  if (!is_distribution(rep.probs, 1e-6)) throw ValidationError(context + ": probs is not a probability vector");
  return rep;
}

std::vector<std::string> surface_forms(std::string_view label) {
  if (label.size() != 1) throw ValidationError("unsupported label '" + std::string(label) + "': labels must be a single symbol");
  return {std::string(label), " " + std::string(label)};
}

SurfaceFormSet surface_form_set(const RenderedPrompt& rendered) {
  SurfaceFormSet out;
  for (const auto& label : rendered.valid_labels) out[label] = surface_forms(label);
  return out;
}

std::vector<std::string> candidate_tokens(const RenderedPrompt& rendered) {
  std::vector<std::string> out;
  for (const auto& label : rendered.valid_labels) {
    for (auto& form : surface_forms(label)) out.push_back(std::move(form));
  }
  return out;
}

ValueRepresentation score_token(const TokenLogprobResult& result, const RenderedPrompt& rendered) {
  const std::size_t k = rendered.size();
  std::vector<double> mass(k, 0.0);
  std::size_t floored = 0;
  std::size_t present = 0;
  for (const auto& label : rendered.valid_labels) {
    double observed_mass = 0.0;
    double floored_mass = 0.0;
    bool any = false;
    bool any_observed = false;
    for (const auto& form : surface_forms(label)) {
      auto it = result.logprobs.find(form);
      if (it == result.logprobs.end()) continue;
      any = true;
      ++present;
      if (result.observed(form)) {
        any_observed = true;
        observed_mass += std::exp(it->second);
      } else {
        ++floored;
        floored_mass += std::exp(it->second);
      }
    }
    if (!any) throw PreconditionError("score_token: no surface form of label '" + label + "' in the backend result");
    mass[rendered.label_map.at(label)] = any_observed ? observed_mass : floored_mass;
  }
  ValueRepresentation rep;
  rep.method = Method::Token;
  rep.probs = normalized(mass);
  rep.diagnostics.floored = floored;
  rep.diagnostics.degenerate = floored == present;
  fill_provenance(rep, rendered);
  return rep;
}

ValueRepresentation score_sequence(std::span<const SequenceScore> scores, const RenderedPrompt* rendered) {
  if (scores.empty()) throw PreconditionError("score_sequence needs one score per option");
  if (rendered && scores.size() != rendered->size()) {
    throw PreconditionError("score_sequence: got " + std::to_string(scores.size()) + " scores for " +
                            std::to_string(rendered->size()) + " options");
  }
  // ppl_i^-1 = exp(mean logprob_i). Shift by the max mean in log space before exponentiating.
  std::vector<double> mean_lp(scores.size());
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (scores[i].tokens == 0) throw PreconditionError("score_sequence: sequence score with zero tokens");
    mean_lp[i] = scores[i].logprob_sum / static_cast<double>(scores[i].tokens);
    best = std::max(best, mean_lp[i]);
  }
  std::vector<double> inv_ppl(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) inv_ppl[i] = std::exp(mean_lp[i] - best);
  ValueRepresentation rep;
  rep.method = Method::Sequence;
  rep.probs = normalized(inv_ppl);
  if (rendered) fill_provenance(rep, *rendered);
  return rep;
}

std::optional<std::size_t> extract_label(std::string_view text, const RenderedPrompt& rendered) {
  const auto& labels = rendered.valid_labels;
  for (auto tier : {&tier_line_initial, &tier_parenthesized, &tier_first_sentence}) {
    const auto found = tier(text, labels);
    if (found.empty()) continue;
    if (found.size() > 1) return std::nullopt;
    return rendered.label_map.at(*found.begin());
  }
  return std::nullopt;
}

ValueRepresentation score_text(std::span<const std::string> samples, const RenderedPrompt& rendered) {
  if (samples.empty()) throw PreconditionError("score_text needs at least one sample");
  const std::size_t k = rendered.size();
  std::vector<double> counts(k, 0.0);
  std::size_t invalid = 0;
  for (const auto& s : samples) {
    if (auto idx = extract_label(s, rendered)) {
      counts[*idx] += 1.0;
    } else {
      ++invalid;
    }
  }
  const double n = static_cast<double>(samples.size());
  const double share = static_cast<double>(invalid) / static_cast<double>(k);
  ValueRepresentation rep;
  rep.method = Method::Text;
  rep.probs.resize(k);
  for (std::size_t i = 0; i < k; ++i) rep.probs[i] = (counts[i] + share) / n;
  rep.diagnostics.invalid = invalid;
  rep.diagnostics.samples = samples.size();
  fill_provenance(rep, rendered);
  return rep;
}

std::size_t majority_answer(std::span<const double> probs) {
  if (probs.empty()) throw PreconditionError("majority_answer of an empty distribution");
  std::size_t best = 0;
  for (std::size_t i = 1; i < probs.size(); ++i) {
    if (probs[i] > probs[best]) best = i;
  }
  return best;
}

}  // namespace vprobe
