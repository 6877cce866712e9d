#include "vprobe/mock_backend.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <random>

#include "vprobe/metrics.hpp"
#include "vprobe/scenarios.hpp"
#include "vprobe/scoring.hpp"

namespace vprobe {

namespace {

constexpr std::string_view kRefusal = "I cannot answer that.";
constexpr double kMinProb = 1e-12;
constexpr double kUnmatchedTokenLogprob = -9.210340371976184;  // ln(1e-4)

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }
  std::size_t draw(const std::vector<double>& weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    const double u = uniform() * total;
    double acc = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      acc += weights[i];
      if (u < acc) return i;
    }
    for (std::size_t i = weights.size(); i-- > 0;) {
      if (weights[i] > 0.0) return i;
    }
    return 0;
  }
  std::uint64_t next() { return eng_(); }

 private:
  std::mt19937_64 eng_;
};

std::string_view trim_view(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

Distribution parse_distribution(const json& j, const std::string& context) {
  Distribution d;
  try {
    d = j.get<Distribution>();
  } catch (const json::exception&) {
    throw SchemaError(context + ": expected an array of numbers");
  }
  if (!is_distribution(d, 1e-6)) throw ValidationError(context + ": not a probability vector");
  return d;
}

std::map<std::string, Distribution> parse_distribution_map(const json& j, const std::string& context) {
  if (!j.is_object()) throw SchemaError(context + ": expected an object of question id -> distribution");
  std::map<std::string, Distribution> out;
  for (const auto& [qid, v] : j.items()) out[qid] = parse_distribution(v, context + "." + qid);
  return out;
}

template <typename T>
T get_or(const json& j, const char* key, T fallback, const std::string& context) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw SchemaError(context + ": field '" + key + "' has the wrong type");
  }
}

std::string persona_target_name(PersonaTarget t) {
  switch (t) {
    case PersonaTarget::Reference:
      return "reference";
    case PersonaTarget::Option:
      return "option";
    case PersonaTarget::Explicit:
      return "explicit";
    case PersonaTarget::AwayFromReference:
      return "away";
  }
  return "reference";
}

std::string format_name(AnswerFormat f) {
  switch (f) {
    case AnswerFormat::Clean:
      return "clean";
    case AnswerFormat::Verbose:
      return "verbose";
    case AnswerFormat::Labeled:
      return "labeled";
    case AnswerFormat::Mixed:
      return "mixed";
  }
  return "clean";
}

std::string rating_mode_name(RatingMode m) {
  switch (m) {
    case RatingMode::Constant:
      return "constant";
    case RatingMode::Linear:
      return "linear";
    case RatingMode::Random:
      return "random";
  }
  return "constant";
}

std::string rating_sentence(double score) { return "I would rate this action " + format_double(score) + " out of 10."; }

}  // namespace

std::vector<std::string> mock_tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  auto is_alnum = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; };
  auto is_space = [](char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; };
  while (i < text.size()) {
    const std::size_t start = i;
    if (text[i] == ' ' && i + 1 < text.size() && !is_space(text[i + 1])) ++i;
    if (is_alnum(text[i])) {
      while (i < text.size() && is_alnum(text[i])) ++i;
    } else if (is_space(text[i])) {
      while (i < text.size() && is_space(text[i])) ++i;
    } else {
      ++i;
    }
    out.emplace_back(text.substr(start, i - start));
  }
  return out;
}

void MockModelSpec::validate() const {
  for (const auto& [qid, d] : distributions) {
    if (!is_distribution(d, 1e-6)) throw ValidationError("mock spec: distribution for " + qid + " is not a probability vector");
  }
  if (!(label_mass > 0.0 && label_mass <= 1.0)) throw ValidationError("mock spec: label_mass must be in (0, 1]");
  if (!(space_fraction >= 0.0 && space_fraction < 1.0)) throw ValidationError("mock spec: space_fraction must be in [0, 1)");
  if (!(refusal_rate >= 0.0 && refusal_rate <= 1.0)) throw ValidationError("mock spec: refusal_rate must be in [0, 1]");
  for (const auto& r : persona_rules) {
    if (r.group.empty()) throw ValidationError("mock spec: persona rule needs a group");
    if (!(r.strength >= 0.0 && r.strength <= 1.0)) throw ValidationError("mock spec: persona strength must be in [0, 1]");
  }
  for (const auto& r : style_rules) {
    if (r.contains.empty()) throw ValidationError("mock spec: style rule needs a 'contains' marker");
  }
  if (generator.per_question < 1) throw ValidationError("mock spec: generator.per_question must be >= 1");
  if (critic.reject_question < 1 || critic.reject_question > 4) throw ValidationError("mock spec: critic.reject_question must be 1..4");
}

MockModelSpec mock_spec_from_json(const json& j, const std::string& ctx) {
  require_known_keys(j, {"model", "seed", "distributions", "default", "label_mass", "space_fraction", "label_bias",
                         "style_rules", "persona_rules", "format", "refusal_rate", "tail_token_logprob",
                         "supports_sequence", "rating", "generator", "critic"},
                     ctx);
  MockModelSpec s;
  s.model = get_or<std::string>(j, "model", "", ctx);
  s.seed = get_or<std::uint64_t>(j, "seed", 0, ctx);
  if (j.contains("distributions")) s.distributions = parse_distribution_map(j.at("distributions"), ctx + ".distributions");
  const auto def = get_or<std::string>(j, "default", "seeded", ctx);
  if (def != "seeded" && def != "uniform") throw SchemaError(ctx + ": default must be 'seeded' or 'uniform'");
  s.uniform_default = def == "uniform";
  s.label_mass = get_or<double>(j, "label_mass", s.label_mass, ctx);
  s.space_fraction = get_or<double>(j, "space_fraction", s.space_fraction, ctx);
  s.label_bias = get_or<std::map<std::string, double>>(j, "label_bias", {}, ctx);
  if (j.contains("style_rules")) {
    for (const auto& r : j.at("style_rules")) {
      const std::string rctx = ctx + ".style_rules";
      require_known_keys(r, {"contains", "reverse", "tilt", "replace"}, rctx);
      StyleRule rule;
      rule.contains = get_or<std::string>(r, "contains", "", rctx);
      rule.reverse = get_or<bool>(r, "reverse", false, rctx);
      rule.tilt = get_or<double>(r, "tilt", 0.0, rctx);
      if (r.contains("replace")) rule.replace = parse_distribution_map(r.at("replace"), rctx + ".replace");
      s.style_rules.push_back(std::move(rule));
    }
  }
  if (j.contains("persona_rules")) {
    for (const auto& r : j.at("persona_rules")) {
      const std::string rctx = ctx + ".persona_rules";
      require_known_keys(r, {"group", "target", "option", "probs", "strength"}, rctx);
      PersonaRule rule;
      rule.group = get_or<std::string>(r, "group", "", rctx);
      const auto target = get_or<std::string>(r, "target", "reference", rctx);
      if (target == "reference") {
        rule.target = PersonaTarget::Reference;
      } else if (target == "option") {
        rule.target = PersonaTarget::Option;
      } else if (target == "explicit") {
        rule.target = PersonaTarget::Explicit;
      } else if (target == "away") {
        rule.target = PersonaTarget::AwayFromReference;
      } else {
        throw SchemaError(rctx + ": target must be reference, option, explicit or away");
      }
      rule.option = get_or<long>(r, "option", 0, rctx);
      if (r.contains("probs")) rule.probs = parse_distribution_map(r.at("probs"), rctx + ".probs");
      rule.strength = get_or<double>(r, "strength", 1.0, rctx);
      s.persona_rules.push_back(std::move(rule));
    }
  }
  const auto fmt = get_or<std::string>(j, "format", "clean", ctx);
  if (fmt == "clean") {
    s.format = AnswerFormat::Clean;
  } else if (fmt == "verbose") {
    s.format = AnswerFormat::Verbose;
  } else if (fmt == "labeled") {
    s.format = AnswerFormat::Labeled;
  } else if (fmt == "mixed") {
    s.format = AnswerFormat::Mixed;
  } else {
    throw SchemaError(ctx + ": format must be clean, verbose, labeled or mixed");
  }
  s.refusal_rate = get_or<double>(j, "refusal_rate", 0.0, ctx);
  if (j.contains("tail_token_logprob") && !j.at("tail_token_logprob").is_null()) {
    s.tail_token_logprob = get_or<double>(j, "tail_token_logprob", 0.0, ctx);
  }
  s.supports_sequence = get_or<bool>(j, "supports_sequence", true, ctx);
  if (j.contains("rating")) {
    const json& r = j.at("rating");
    require_known_keys(r, {"mode", "value"}, ctx + ".rating");
    const auto mode = get_or<std::string>(r, "mode", "constant", ctx + ".rating");
    if (mode == "constant") {
      s.rating.mode = RatingMode::Constant;
    } else if (mode == "linear") {
      s.rating.mode = RatingMode::Linear;
    } else if (mode == "random") {
      s.rating.mode = RatingMode::Random;
    } else {
      throw SchemaError(ctx + ".rating: mode must be constant, linear or random");
    }
    s.rating.value = get_or<double>(r, "value", s.rating.value, ctx + ".rating");
  }
  if (j.contains("generator")) {
    const json& g = j.at("generator");
    require_known_keys(g, {"per_question", "omit"}, ctx + ".generator");
    s.generator.per_question = get_or<int>(g, "per_question", 10, ctx + ".generator");
    s.generator.omit = get_or<std::vector<std::string>>(g, "omit", {}, ctx + ".generator");
  }
  if (j.contains("critic")) {
    const json& c = j.at("critic");
    require_known_keys(c, {"reject_when_contains", "reject_question", "prose"}, ctx + ".critic");
    s.critic.reject_when_contains = get_or<std::string>(c, "reject_when_contains", "", ctx + ".critic");
    s.critic.reject_question = get_or<int>(c, "reject_question", 2, ctx + ".critic");
    s.critic.prose = get_or<bool>(c, "prose", false, ctx + ".critic");
  }
  try {
    s.validate();
  } catch (const ValidationError& e) {
    throw ValidationError(ctx + ": " + e.what());
  }
  return s;
}

json to_json(const MockModelSpec& s) {
  json style_rules = json::array();
  for (const auto& r : s.style_rules) {
    style_rules.push_back({{"contains", r.contains}, {"reverse", r.reverse}, {"tilt", r.tilt}, {"replace", r.replace}});
  }
  json persona_rules = json::array();
  for (const auto& r : s.persona_rules) {
    persona_rules.push_back({{"group", r.group},
                             {"target", persona_target_name(r.target)},
                             {"option", r.option},
                             {"probs", r.probs},
                             {"strength", r.strength}});
  }
  return {{"model", s.model},
          {"seed", s.seed},
          {"distributions", s.distributions},
          {"default", s.uniform_default ? "uniform" : "seeded"},
          {"label_mass", s.label_mass},
          {"space_fraction", s.space_fraction},
          {"label_bias", s.label_bias},
          {"style_rules", style_rules},
          {"persona_rules", persona_rules},
          {"format", format_name(s.format)},
          {"refusal_rate", s.refusal_rate},
          {"tail_token_logprob", s.tail_token_logprob ? json(*s.tail_token_logprob) : json(nullptr)},
          {"supports_sequence", s.supports_sequence},
          {"rating", {{"mode", rating_mode_name(s.rating.mode)}, {"value", s.rating.value}}},
          {"generator", {{"per_question", s.generator.per_question}, {"omit", s.generator.omit}}},
          {"critic",
           {{"reject_when_contains", s.critic.reject_when_contains},
            {"reject_question", s.critic.reject_question},
            {"prose", s.critic.prose}}}};
}

MockBackend::MockBackend(MockModelSpec spec, MockContext context, std::shared_ptr<ResponseCache> cache,
                         int max_parallel, int top_logprobs)
    : Backend("mock", spec.model.empty() ? "mock" : spec.model, max_parallel, std::move(cache)),
      spec_(std::move(spec)),
      context_(std::move(context)),
      top_logprobs_(top_logprobs) {
  spec_.validate();
  if (top_logprobs_ < 1) throw ValidationError("mock: top_logprobs must be >= 1");
  std::string fingerprint = to_json(spec_).dump();
  for (const auto& q : context_.bank.questions) fingerprint += to_json(q).dump();
  for (const auto& [_, r] : context_.references) fingerprint += r.question_id + r.group + json(r.counts).dump();
  for (const auto& s : context_.scenarios) fingerprint += to_json(s).dump();
  identity_ = model() + "#" + sha256_hex(fingerprint).substr(0, 16);
}

Distribution MockBackend::base_distribution(const ValueQuestion& q) const {
  if (auto it = spec_.distributions.find(q.id); it != spec_.distributions.end()) {
    if (it->second.size() != q.size()) {
      throw ValidationError("mock: distribution for " + q.id + " has " + std::to_string(it->second.size()) +
                            " entries, question has " + std::to_string(q.size()));
    }
    return it->second;
  }
  if (spec_.uniform_default) return Distribution(q.size(), 1.0 / static_cast<double>(q.size()));
  Rng rng(stable_seed("base|" + std::to_string(spec_.seed) + "|" + q.id));
  std::vector<double> w(q.size());
  for (double& v : w) {
    const double e = -std::log(1.0 - rng.uniform());
    v = e * e + 1e-3;
  }
  return normalized(w);
}

const ValueQuestion* MockBackend::find_question(const std::string& prompt, std::size_t* position) const {
  const ValueQuestion* best = nullptr;
  std::size_t best_pos = 0;
  for (const auto& q : context_.bank.questions) {
    const auto pos = prompt.rfind(q.stem);
    if (pos == std::string::npos) continue;
    if (!best || pos > best_pos || (pos == best_pos && q.stem.size() > best->stem.size())) {
      best = &q;
      best_pos = pos;
    }
  }
  if (position) *position = best_pos;
  return best;
}

MockReading MockBackend::read_prompt(const std::string& prompt) const {
  std::size_t pos = 0;
  const ValueQuestion* q = find_question(prompt, &pos);
  if (!q) throw ValidationError("mock: prompt does not contain a known question");
  const std::size_t k = q->size();

  MockReading r;
  r.question = q;
  std::vector<bool> assigned(k, false);
  std::size_t start = prompt.find('\n', pos);
  while (start != std::string::npos && r.labels.size() < k) {
    ++start;
    auto end = prompt.find('\n', start);
    const std::string_view line = std::string_view(prompt).substr(start, end == std::string::npos ? std::string::npos : end - start);
    const auto dot = line.find(". ");
    if (dot != std::string_view::npos && dot > 0 && dot <= 3) {
      const std::string_view text = line.substr(dot + 2);
      for (std::size_t c = 0; c < k; ++c) {
        if (!assigned[c] && q->options[c] == text) {
          assigned[c] = true;
          r.labels.emplace_back(line.substr(0, dot));
          r.canonical.push_back(c);
          break;
        }
      }
    }
    start = end;
  }
  if (r.labels.size() != k) throw ValidationError("mock: could not read the option list for question " + q->id);

  const std::string_view preamble = std::string_view(prompt).substr(0, pos);
  std::size_t best_len = 0;
  for (const auto& rule : spec_.persona_rules) {
    if (rule.group.size() > best_len && preamble.find(rule.group) != std::string_view::npos) {
      r.persona = rule.group;
      best_len = rule.group.size();
    }
  }

  Distribution d = base_distribution(*q);
  for (const auto& rule : spec_.style_rules) {
    if (prompt.find(rule.contains) == std::string::npos) continue;
    if (auto it = rule.replace.find(q->id); it != rule.replace.end() && it->second.size() == k) d = it->second;
    if (rule.reverse) std::reverse(d.begin(), d.end());
    if (rule.tilt != 0.0) {
      for (std::size_t i = 0; i < k; ++i) d[i] *= std::exp(rule.tilt * static_cast<double>(i));
      d = normalized(d);
    }
  }
  if (r.persona) {
    for (const auto& rule : spec_.persona_rules) {
      if (rule.group != *r.persona) continue;
      std::optional<Distribution> target;
      const auto ref = context_.references.find({q->id, rule.group});
      switch (rule.target) {
        case PersonaTarget::Reference:
          if (ref != context_.references.end()) target = reference_distribution(ref->second);
          break;
        case PersonaTarget::Option: {
          const long idx = rule.option < 0 ? static_cast<long>(k) + rule.option : rule.option;
          if (idx >= 0 && idx < static_cast<long>(k)) {
            target = Distribution(k, 0.0);
            (*target)[static_cast<std::size_t>(idx)] = 1.0;
          }
          break;
        }
        case PersonaTarget::Explicit:
          if (auto it = rule.probs.find(q->id); it != rule.probs.end() && it->second.size() == k) target = it->second;
          break;
        case PersonaTarget::AwayFromReference:
          if (ref != context_.references.end()) {
            const auto qref = reference_distribution(ref->second);
            double mean = 0.0;
            for (std::size_t i = 0; i < k; ++i) mean += static_cast<double>(i) * qref[i];
            target = Distribution(k, 0.0);
            (*target)[mean < 0.5 * static_cast<double>(k - 1) ? k - 1 : 0] = 1.0;
          }
          break;
      }
      if (!target) continue;
      for (std::size_t i = 0; i < k; ++i) d[i] = (1.0 - rule.strength) * d[i] + rule.strength * (*target)[i];
    }
  }
  r.canonical_probs = d;

  std::vector<double> display(k);
  for (std::size_t slot = 0; slot < k; ++slot) {
    double bias = 0.0;
    if (auto it = spec_.label_bias.find(r.labels[slot]); it != spec_.label_bias.end()) bias = it->second;
    display[slot] = d[r.canonical[slot]] * std::exp(bias);
  }
  r.display_probs = normalized(display);
  return r;
}

json MockBackend::raw_top_logprobs(const std::string& prompt, int top_k) {
  const MockReading r = read_prompt(prompt);
  std::vector<std::pair<std::string, double>> mass;
  std::vector<std::string> label_forms;
  for (std::size_t slot = 0; slot < r.labels.size(); ++slot) {
    const double m = spec_.label_mass * r.display_probs[slot];
    mass.emplace_back(r.labels[slot], m * (1.0 - spec_.space_fraction));
    mass.emplace_back(" " + r.labels[slot], m * spec_.space_fraction);
    label_forms.push_back(r.labels[slot]);
    label_forms.push_back(" " + r.labels[slot]);
  }
  static const std::vector<std::string> fillers{"I", " I", "The", " The", "\n", "Sure", "My", " My", "As", "Certainly"};
  std::vector<std::string> usable;
  for (const auto& f : fillers) {
    if (std::find(label_forms.begin(), label_forms.end(), f) == label_forms.end()) usable.push_back(f);
  }
  const double rest = 1.0 - spec_.label_mass;
  if (rest > 0.0 && !usable.empty()) {
    std::vector<double> w(usable.size());
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = std::pow(0.5, static_cast<double>(i));
    const auto share = normalized(w);
    for (std::size_t i = 0; i < usable.size(); ++i) mass.emplace_back(usable[i], rest * share[i]);
  }
  std::erase_if(mass, [](const auto& e) { return !(e.second > 0.0); });
  std::stable_sort(mass.begin(), mass.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (mass.size() > static_cast<std::size_t>(top_k)) mass.resize(static_cast<std::size_t>(top_k));
  json top = json::array();
  for (const auto& [tok, m] : mass) top.push_back(json::array({tok, std::log(m)}));
  return {{"top", top}};
}

json MockBackend::raw_sequence(const std::string& prompt, const std::string& continuation) {
  if (!spec_.supports_sequence) {
    throw CapabilityError("sequence_logprob is not supported by mock model " + model());
  }
  const MockReading r = read_prompt(prompt);
  const auto tokens = mock_tokenize(continuation);
  const std::string_view body = trim_view(continuation);
  std::optional<std::size_t> slot;
  for (std::size_t s = 0; s < r.labels.size(); ++s) {
    const std::string& label = r.labels[s];
    const std::string full = label + ". " + r.question->options[r.canonical[s]];
    if (body == label || body == label + "." || body == full) {
      slot = s;
      break;
    }
  }
  json lps = json::array();
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    if (!slot) {
      lps.push_back(kUnmatchedTokenLogprob);
      continue;
    }
    const double lp = std::log(std::max(r.display_probs[*slot], kMinProb));
    lps.push_back(t > 0 && spec_.tail_token_logprob ? *spec_.tail_token_logprob : lp);
  }
  return {{"tokens", tokens}, {"logprobs", lps}};
}

std::string MockBackend::answer_text(const MockReading& reading, std::size_t slot, AnswerFormat format) const {
  const std::string& label = reading.labels[slot];
  switch (format) {
    case AnswerFormat::Clean:
      return label;
    case AnswerFormat::Verbose:
      return "My answer is (" + label + ").";
    case AnswerFormat::Labeled:
      return label + ". " + reading.question->options[reading.canonical[slot]];
    case AnswerFormat::Mixed:
      break;
  }
  return label;
}

std::string MockBackend::rating_text(const std::string& prompt, std::uint64_t seed) const {
  const auto situation = line_value(prompt, "Situation: ");
  const auto action = line_value(prompt, "Action: ");
  const ScenarioRecord* match = nullptr;
  std::optional<Pole> pole;
  if (situation && action) {
    for (const auto& s : context_.scenarios) {
      if (s.situation != *situation) continue;
      if (s.action_a == *action) {
        match = &s;
        pole = s.pole_a;
        break;
      }
      if (s.action_b == *action) {
        match = &s;
        pole = s.pole_b;
        break;
      }
    }
  }
  switch (spec_.rating.mode) {
    case RatingMode::Constant:
      return rating_sentence(spec_.rating.value);
    case RatingMode::Random: {
      Rng rng(seed);
      return rating_sentence(static_cast<double>(rng.next() % 11));
    }
    case RatingMode::Linear:
      if (!match) return rating_sentence(spec_.rating.value);
      const ValueQuestion* q = context_.bank.find(match->question_id);
      if (!q) return rating_sentence(spec_.rating.value);
      const auto w = pole_weights(base_distribution(*q));
      return rating_sentence(10.0 * (*pole == Pole::Low ? w.low : w.high));
  }
  return rating_sentence(spec_.rating.value);
}

std::string MockBackend::generation_text(const std::string& prompt) const {
  const ValueQuestion* q = find_question(prompt);
  if (!q) return "I cannot help with that.";
  const std::string subject = q->topic.empty() ? "this question" : q->topic;
  auto omitted = [&](const std::string& tag) {
    return std::find(spec_.generator.omit.begin(), spec_.generator.omit.end(), tag) != spec_.generator.omit.end();
  };
  std::string out;
  for (int i = 1; i <= spec_.generator.per_question; ++i) {
    const std::string n = std::to_string(i);
    const bool at_work = i % 2 == 0;
    if (!omitted("Situation_" + n)) {
      out += "Situation_" + n + ": PersonX is " + (at_work ? "at work when a colleague" : "at home when a relative") +
             " raises a decision about " + subject + " (case " + n + ").\n";
    }
    if (!omitted("ActionA_" + n)) {
      out += "ActionA_" + n + ": PersonX acts in line with the view \"" + q->low_pole_text() + "\" (case " + n + ").\n";
    }
    if (!omitted("ActionB_" + n)) {
      out += "ActionB_" + n + ": PersonX acts in line with the view \"" + q->high_pole_text() + "\" (case " + n + ").\n";
    }
  }
  return out;
}

std::string MockBackend::critic_text(const std::string& prompt) const {
  if (spec_.critic.prose) return "These samples look reasonable to me overall.";
  const auto situation = line_value(prompt, "Situation: ");
  const bool reject = !spec_.critic.reject_when_contains.empty() && situation &&
                      situation->find(spec_.critic.reject_when_contains) != std::string::npos;
  std::string out = "{";
  for (int i = 1; i <= 4; ++i) {
    const bool no = reject && i == spec_.critic.reject_question;
    out += "\"Q" + std::to_string(i) + "\": \"" + (no ? "No" : "Yes") + "\"";
    if (i < 4) out += ", ";
  }
  return out + "}";
}

json MockBackend::raw_sample(const std::string& prompt, int n, double temperature, int /*max_tokens*/,
                             std::uint64_t seed) {
  Rng rng(stable_seed("sample|" + std::to_string(spec_.seed) + "|" + std::to_string(seed) + "|" + std::to_string(n) +
                      "|" + format_double(temperature) + "|" + prompt));
  std::vector<std::string> texts;
  texts.reserve(static_cast<std::size_t>(n));

  if (prompt.find(kVerificationMarker) != std::string::npos) {
    texts.assign(static_cast<std::size_t>(n), critic_text(prompt));
    return {{"texts", texts}};
  }
  if (prompt.find(kGenerationMarker) != std::string::npos) {
    texts.assign(static_cast<std::size_t>(n), generation_text(prompt));
    return {{"texts", texts}};
  }
  if (prompt.find(kRatingMarker) != std::string::npos) {
    for (int i = 0; i < n; ++i) texts.push_back(rating_text(prompt, rng.next()));
    return {{"texts", texts}};
  }

  MockReading r;
  try {
    r = read_prompt(prompt);
  } catch (const ValidationError&) {
    texts.assign(static_cast<std::size_t>(n), std::string(kRefusal));
    return {{"texts", texts}};
  }

  if (temperature == 0.0) {
    const std::size_t best = majority_answer(r.display_probs);
    const std::string text =
        spec_.refusal_rate >= 0.5 ? std::string(kRefusal)
                                  : answer_text(r, best, spec_.format == AnswerFormat::Mixed ? AnswerFormat::Clean : spec_.format);
    texts.assign(static_cast<std::size_t>(n), text);
    return {{"texts", texts}};
  }

  std::vector<double> weights(r.display_probs.size());
  for (std::size_t i = 0; i < weights.size(); ++i) {
    weights[i] = r.display_probs[i] > 0.0 ? std::pow(r.display_probs[i], 1.0 / temperature) : 0.0;
  }
  for (int i = 0; i < n; ++i) {
    if (spec_.refusal_rate > 0.0 && rng.uniform() < spec_.refusal_rate) {
      texts.emplace_back(kRefusal);
      continue;
    }
    const std::size_t slot = rng.draw(weights);
    AnswerFormat fmt = spec_.format;
    if (fmt == AnswerFormat::Mixed) {
      static constexpr AnswerFormat kChoices[] = {AnswerFormat::Clean, AnswerFormat::Verbose, AnswerFormat::Labeled};
      fmt = kChoices[rng.next() % 3];
    }
    texts.push_back(answer_text(r, slot, fmt));
  }
  return {{"texts", texts}};
}

}  // namespace vprobe
