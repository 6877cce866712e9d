#include "vprobe/question_bank.hpp"

#include <set>

namespace vprobe {

namespace {

template <typename T>
T required(const json& j, const char* key, const std::string& context) {
  if (!j.contains(key)) throw SchemaError(context + ": missing field '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw SchemaError(context + ": field '" + key + "' has the wrong type");
  }
}

std::optional<std::string> optional_string(const json& j, const char* key, const std::string& context) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  if (!j.at(key).is_string()) throw SchemaError(context + ": field '" + key + "' must be a string");
  return j.at(key).get<std::string>();
}

bool is_meta_record(const json& j) { return j.is_object() && j.contains("_meta"); }

}  // namespace

const ValueQuestion* QuestionBank::find(const std::string& id) const {
  for (const auto& q : questions) {
    if (q.id == id) return &q;
  }
  return nullptr;
}

const ValueQuestion& QuestionBank::at(const std::string& id) const {
  if (const auto* q = find(id)) return *q;
  throw ValidationError("unknown question id '" + id + "'");
}

void validate_question(const ValueQuestion& q) {
  if (q.id.empty()) throw ValidationError("question id must be non-empty");
  if (q.stem.empty()) throw ValidationError("question " + q.id + ": stem must be non-empty");
  if (q.options.size() < 2) throw ValidationError("question " + q.id + ": needs at least 2 options");
  if (q.options.size() > kMaxOptions) throw ValidationError("question " + q.id + ": more than 26 options");
  std::set<std::string> seen;
  for (const auto& o : q.options) {
    if (o.empty()) throw ValidationError("question " + q.id + ": option text must be non-empty");
    if (!seen.insert(o).second) throw ValidationError("question " + q.id + ": duplicate option '" + o + "'");
  }
}

void validate_bank(const QuestionBank& bank) {
  if (bank.questions.empty()) throw ValidationError("question bank is empty");
  std::set<std::string> ids;
  for (const auto& q : bank.questions) {
    validate_question(q);
    if (!ids.insert(q.id).second) throw ValidationError("duplicate question id '" + q.id + "'");
  }
}

ValueQuestion question_from_json(const json& j, const std::string& context) {
  require_known_keys(j, {"id", "stem", "options", "topic", "pole_low", "pole_high"}, context);
  ValueQuestion q;
  q.id = required<std::string>(j, "id", context);
  q.stem = required<std::string>(j, "stem", context);
  q.options = required<std::vector<std::string>>(j, "options", context);
  q.topic = j.contains("topic") ? required<std::string>(j, "topic", context) : std::string{};
  q.pole_low = optional_string(j, "pole_low", context);
  q.pole_high = optional_string(j, "pole_high", context);
  return q;
}

json to_json(const ValueQuestion& q) {
  json j = {{"id", q.id}, {"stem", q.stem}, {"options", q.options}, {"topic", q.topic}};
  if (q.pole_low) j["pole_low"] = *q.pole_low;
  if (q.pole_high) j["pole_high"] = *q.pole_high;
  return j;
}

QuestionBank load_question_bank(const std::filesystem::path& path) {
  QuestionBank bank;
  std::set<std::string> ids;
  for (const auto& rec : read_json_records(path)) {
    const std::string ctx = where(path, rec.line);
    if (is_meta_record(rec.value)) {
      require_known_keys(rec.value, {"_meta"}, ctx);
      const json& meta = rec.value.at("_meta");
      require_known_keys(meta, {"source", "version"}, ctx);
      bank.source = meta.value("source", "");
      bank.version = meta.value("version", "");
      continue;
    }
    ValueQuestion q = question_from_json(rec.value, ctx);
    try {
      validate_question(q);
    } catch (const ValidationError& e) {
      throw ValidationError(ctx + ": " + e.what());
    }
    if (!ids.insert(q.id).second) throw ValidationError(ctx + ": duplicate question id '" + q.id + "'");
    bank.questions.push_back(std::move(q));
  }
  if (bank.questions.empty()) throw ValidationError(path.string() + ": question bank is empty");
  return bank;
}

void save_question_bank(const QuestionBank& bank, const std::filesystem::path& path) {
  validate_bank(bank);
  std::vector<json> lines;
  if (!bank.source.empty() || !bank.version.empty()) {
    lines.push_back({{"_meta", {{"source", bank.source}, {"version", bank.version}}}});
  }
  for (const auto& q : bank.questions) lines.push_back(to_json(q));
  write_json_lines(path, lines);
}

ReferenceMap load_references(const std::filesystem::path& path, const QuestionBank& bank) {
  ReferenceMap out;
  for (const auto& rec : read_json_records(path)) {
    const std::string ctx = where(path, rec.line);
    require_known_keys(rec.value, {"question_id", "group", "counts"}, ctx);
    HumanReference ref;
    ref.question_id = required<std::string>(rec.value, "question_id", ctx);
    ref.group = required<std::string>(rec.value, "group", ctx);
    ref.counts = required<std::vector<std::int64_t>>(rec.value, "counts", ctx);
    const ValueQuestion* q = bank.find(ref.question_id);
    if (!q) throw ValidationError(ctx + ": unknown question id '" + ref.question_id + "'");
    if (ref.group.empty()) throw ValidationError(ctx + ": group must be non-empty");
    if (ref.counts.size() != q->size()) {
      throw ValidationError(ctx + ": counts has " + std::to_string(ref.counts.size()) + " entries but question " +
                            q->id + " has " + std::to_string(q->size()) + " options");
    }
    std::int64_t total = 0;
    for (auto c : ref.counts) {
      if (c < 0) throw ValidationError(ctx + ": counts must be non-negative");
      total += c;
    }
    if (total <= 0) throw ValidationError(ctx + ": counts for (" + ref.question_id + ", " + ref.group + ") total zero");
    ReferenceKey key{ref.question_id, ref.group};
    if (out.contains(key)) {
      throw ValidationError(ctx + ": duplicate reference for (" + ref.question_id + ", " + ref.group + ")");
    }
    out.emplace(std::move(key), std::move(ref));
  }
  return out;
}

void save_references(const ReferenceMap& refs, const std::filesystem::path& path) {
  std::vector<json> lines;
  for (const auto& [_, r] : refs) {
    lines.push_back({{"question_id", r.question_id}, {"group", r.group}, {"counts", r.counts}});
  }
  write_json_lines(path, lines);
}

Distribution reference_distribution(const HumanReference& ref) {
  std::int64_t total = 0;
  for (auto c : ref.counts) {
    if (c < 0) throw PreconditionError("reference counts must be non-negative");
    total += c;
  }
  if (total <= 0) throw PreconditionError("reference counts total zero");
  Distribution p(ref.counts.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    p[i] = static_cast<double>(ref.counts[i]) / static_cast<double>(total);
  }
  return p;
}

std::vector<std::string> reference_groups(const ReferenceMap& refs) {
  std::set<std::string> groups;
  for (const auto& [key, _] : refs) groups.insert(key.second);
  return {groups.begin(), groups.end()};
}

std::string_view to_string(Pole p) { return p == Pole::Low ? "low" : "high"; }

Pole pole_from_string(std::string_view s) {
  if (s == "low") return Pole::Low;
  if (s == "high") return Pole::High;
  throw ValidationError("pole must be 'low' or 'high', got '" + std::string(s) + "'");
}

ScenarioRecord scenario_from_json(const json& j, const std::string& context) {
  require_known_keys(j, {"question_id", "situation", "action_a", "action_b", "pole_a", "pole_b", "verified"}, context);
  ScenarioRecord s;
  s.question_id = required<std::string>(j, "question_id", context);
  s.situation = required<std::string>(j, "situation", context);
  s.action_a = required<std::string>(j, "action_a", context);
  s.action_b = required<std::string>(j, "action_b", context);
  try {
    s.pole_a = pole_from_string(required<std::string>(j, "pole_a", context));
    s.pole_b = pole_from_string(required<std::string>(j, "pole_b", context));
  } catch (const ValidationError& e) {
    throw ValidationError(context + ": " + e.what());
  }
  s.verified = j.contains("verified") ? required<bool>(j, "verified", context) : false;
  if (s.pole_a == s.pole_b) throw ValidationError(context + ": pole_a and pole_b must differ");
  if (s.situation.empty() || s.action_a.empty() || s.action_b.empty()) {
    throw ValidationError(context + ": scenario texts must be non-empty");
  }
  return s;
}

json to_json(const ScenarioRecord& s) {
  return {{"question_id", s.question_id},         {"situation", s.situation},
          {"action_a", s.action_a},               {"action_b", s.action_b},
          {"pole_a", std::string(to_string(s.pole_a))}, {"pole_b", std::string(to_string(s.pole_b))},
          {"verified", s.verified}};
}

std::vector<ScenarioRecord> load_scenarios(const std::filesystem::path& path, const QuestionBank& bank) {
  std::vector<ScenarioRecord> out;
  for (const auto& rec : read_json_records(path)) {
    const std::string ctx = where(path, rec.line);
    ScenarioRecord s = scenario_from_json(rec.value, ctx);
    if (!bank.find(s.question_id)) throw ValidationError(ctx + ": unknown question id '" + s.question_id + "'");
    out.push_back(std::move(s));
  }
  return out;
}

void save_scenarios(const std::vector<ScenarioRecord>& records, const std::filesystem::path& path) {
  std::vector<json> lines;
  lines.reserve(records.size());
  for (const auto& r : records) lines.push_back(to_json(r));
  write_json_lines(path, lines);
}

std::vector<std::string> scenario_ids(const std::vector<ScenarioRecord>& records) {
  std::map<std::string, int> per_question;
  std::vector<std::string> ids;
  ids.reserve(records.size());
  for (const auto& r : records) {
    ids.push_back(r.question_id + "#" + std::to_string(per_question[r.question_id]++));
  }
  return ids;
}

}  // namespace vprobe
