#include "vprobe/reports.hpp"

#include <map>
#include <set>

namespace vprobe {

namespace {

std::string num(double v) { return format_double(v); }

std::string join_rows(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows) {
  std::string out = csv_line(header);
  for (const auto& r : rows) out += csv_line(r);
  return out;
}

struct LongRow {
  std::string model;
  std::string method;
  std::string metric;
  double value;
};

std::string long_csv(const std::vector<LongRow>& rows) {
  std::string out = csv_line({"model", "method", "metric", "value"});
  for (const auto& r : rows) out += csv_line({r.model, r.method, r.metric, num(r.value)});
  return out;
}

json number_or_null(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

void append_robustness(const std::string& kind, const RobustnessResult& result,
                       std::vector<std::vector<std::string>>& rows, std::vector<LongRow>& long_rows, json& summary) {
  json section = json::array();
  for (const auto& r : result.rows) {
    const std::string method(to_string(r.method));
    const double coverage = r.expected_pairs ? static_cast<double>(r.pairs) / static_cast<double>(r.expected_pairs) : 0.0;
    rows.push_back({r.model, method, kind, num(r.mismatch_rate), num(r.mean_js_distance), num(r.mean_js_divergence),
                    std::to_string(r.pairs), std::to_string(r.expected_pairs), num(coverage)});
    long_rows.push_back({r.model, method, kind + "_mismatch_rate", r.mismatch_rate});
    long_rows.push_back({r.model, method, kind + "_js_distance", r.mean_js_distance});
    long_rows.push_back({r.model, method, kind + "_js_divergence", r.mean_js_divergence});
    section.push_back({{"model", r.model},
                       {"method", method},
                       {"mismatch_rate", r.mismatch_rate},
                       {"mean_js_distance", r.mean_js_distance},
                       {"mean_js_divergence", r.mean_js_divergence},
                       {"pairs", r.pairs},
                       {"expected_pairs", r.expected_pairs}});
  }
  summary[kind] = {{"rows", section}, {"notes", result.notes}};
}

std::string pairs_csv(const RobustnessResult& result) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& p : result.pairs) {
    rows.push_back({p.model, std::string(to_string(p.method)), p.question_id, p.condition_a, p.condition_b,
                    std::to_string(p.mismatch), num(p.js_distance), num(p.js_divergence)});
  }
  return join_rows({"model", "method", "question_id", "condition_a", "condition_b", "mismatch", "js_distance",
                    "js_divergence"},
                   rows);
}

}  // namespace

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string csv_line(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out += ',';
    out += csv_field(fields[i]);
  }
  return out + "\n";
}

std::vector<std::filesystem::path> write_robustness_reports(const std::optional<RobustnessResult>& prompt,
                                                            const std::optional<RobustnessResult>& selection,
                                                            const std::vector<std::string>& notes,
                                                            const std::filesystem::path& dir) {
  std::vector<std::vector<std::string>> rows;
  std::vector<LongRow> long_rows;
  json summary = json::object();
  std::vector<std::filesystem::path> written;
  if (prompt) {
    append_robustness("prompt", *prompt, rows, long_rows, summary);
    write_text_file(dir / "robustness_prompt_pairs.csv", pairs_csv(*prompt));
    written.push_back(dir / "robustness_prompt_pairs.csv");
  }
  if (selection) {
    append_robustness("selection", *selection, rows, long_rows, summary);
    write_text_file(dir / "robustness_selection_pairs.csv", pairs_csv(*selection));
    written.push_back(dir / "robustness_selection_pairs.csv");
  }
  summary["notes"] = notes;
  write_text_file(dir / "robustness.csv",
                  join_rows({"model", "method", "kind", "mismatch_rate", "mean_js_distance", "mean_js_divergence",
                             "pairs", "expected_pairs", "coverage"},
                            rows));
  write_text_file(dir / "robustness_long.csv", long_csv(long_rows));
  write_text_file(dir / "robustness_summary.json", summary.dump(2) + "\n");
  written.insert(written.begin(), {dir / "robustness.csv", dir / "robustness_long.csv", dir / "robustness_summary.json"});
  return written;
}

std::vector<std::filesystem::path> write_alignment_reports(const AlignmentResult& result,
                                                           const std::filesystem::path& dir) {
  const std::string agg(to_string(result.aggregation));
  std::vector<std::vector<std::string>> rows;
  std::vector<LongRow> long_rows;
  json section = json::array();
  for (const auto& r : result.rows) {
    const std::string method(to_string(r.method));
    rows.push_back({r.model, method, r.group, agg, num(r.alignment_generic), num(r.alignment_persona),
                    num(r.improvement), std::to_string(r.questions)});
    long_rows.push_back({r.model, method, "alignment_generic[" + r.group + "]", r.alignment_generic});
    long_rows.push_back({r.model, method, "alignment_persona[" + r.group + "]", r.alignment_persona});
    long_rows.push_back({r.model, method, "improvement[" + r.group + "]", r.improvement});
    section.push_back({{"model", r.model},
                       {"method", method},
                       {"group", r.group},
                       {"alignment_generic", r.alignment_generic},
                       {"alignment_persona", r.alignment_persona},
                       {"improvement", r.improvement},
                       {"questions", r.questions}});
  }
  std::vector<std::vector<std::string>> details;
  for (const auto& d : result.details) {
    details.push_back({d.model, std::string(to_string(d.method)), d.group, d.question_id, num(d.value.generic),
                       num(d.value.persona), num(d.value.improvement())});
  }
  const json summary{{"aggregation", agg}, {"rows", section}, {"notes", result.notes}};
  write_text_file(dir / "alignment.csv", join_rows({"model", "method", "group", "aggregation", "alignment_generic",
                                                     "alignment_persona", "improvement", "questions"},
                                                    rows));
  write_text_file(dir / "alignment_questions.csv",
                  join_rows({"model", "method", "group", "question_id", "alignment_generic", "alignment_persona",
                             "improvement"},
                            details));
  write_text_file(dir / "alignment_long.csv", long_csv(long_rows));
  write_text_file(dir / "alignment_summary.json", summary.dump(2) + "\n");
  return {dir / "alignment.csv", dir / "alignment_questions.csv", dir / "alignment_long.csv",
          dir / "alignment_summary.json"};
}

std::vector<std::filesystem::path> write_actions_reports(const AgreementResult& result,
                                                         const std::filesystem::path& dir) {
  std::vector<std::vector<std::string>> rows;
  std::vector<LongRow> long_rows;
  json section = json::array();
  for (const auto& r : result.rows) {
    const std::string method(to_string(r.method));
    auto opt = [](const std::optional<Correlation>& c, bool p) -> std::string {
      if (!c) return "";
      return format_double(p ? c->p_value : c->r);
    };
    rows.push_back({r.model, method, std::to_string(r.n), opt(r.pearson, false), opt(r.pearson, true),
                    opt(r.spearman, false), opt(r.spearman, true), r.error});
    if (r.pearson) {
      long_rows.push_back({r.model, method, "pearson_r", r.pearson->r});
      long_rows.push_back({r.model, method, "pearson_p", r.pearson->p_value});
    }
    if (r.spearman) {
      long_rows.push_back({r.model, method, "spearman_rho", r.spearman->r});
      long_rows.push_back({r.model, method, "spearman_p", r.spearman->p_value});
    }
    section.push_back({{"model", r.model},
                       {"method", method},
                       {"n", r.n},
                       {"pearson_r", number_or_null(r.pearson ? std::optional(r.pearson->r) : std::nullopt)},
                       {"pearson_p", number_or_null(r.pearson ? std::optional(r.pearson->p_value) : std::nullopt)},
                       {"spearman_rho", number_or_null(r.spearman ? std::optional(r.spearman->r) : std::nullopt)},
                       {"spearman_p", number_or_null(r.spearman ? std::optional(r.spearman->p_value) : std::nullopt)},
                       {"error", r.error}});
  }
  std::vector<std::vector<std::string>> points;
  for (const auto& p : result.points) {
    points.push_back({p.model, std::string(to_string(p.method)), p.scenario_id, std::string(to_string(p.slot)),
                      num(p.x), num(p.y)});
  }
  const json summary{{"rows", section}, {"notes", result.notes}};
  write_text_file(dir / "actions.csv", join_rows({"model", "method", "n", "pearson_r", "pearson_p", "spearman_rho",
                                                   "spearman_p", "error"},
                                                  rows));
  write_text_file(dir / "actions_points.csv",
                  join_rows({"model", "method", "scenario_id", "slot", "pole_weight", "rating"}, points));
  write_text_file(dir / "actions_long.csv", long_csv(long_rows));
  write_text_file(dir / "actions_summary.json", summary.dump(2) + "\n");
  return {dir / "actions.csv", dir / "actions_points.csv", dir / "actions_long.csv", dir / "actions_summary.json"};
}

void write_completeness(const std::vector<CollectOutcome>& outcomes, const std::filesystem::path& csv_path) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& o : outcomes) {
    std::map<std::string, std::size_t> collected, failed;
    std::set<std::string> methods;
    std::string model;
    for (const auto& [k, _] : o.store.all()) {
      ++collected[std::string(to_string(k.method))];
      methods.insert(std::string(to_string(k.method)));
      model = k.model;
    }
    for (const auto& f : o.failures) {
      ++failed[std::string(to_string(f.key.method))];
      methods.insert(std::string(to_string(f.key.method)));
      model = f.key.model;
    }
    const std::size_t per_method = methods.empty() ? 0 : o.expected / methods.size();
    for (const auto& m : methods) {
      const double c = per_method ? static_cast<double>(collected[m]) / static_cast<double>(per_method) : 0.0;
      rows.push_back({model, m, std::to_string(per_method), std::to_string(collected[m]), std::to_string(failed[m]),
                      format_double(c)});
    }
  }
  write_text_file(csv_path, join_rows({"model", "method", "expected", "collected", "failed", "completeness"}, rows));
}

void write_failures(const std::vector<CollectOutcome>& outcomes, const std::filesystem::path& jsonl_path) {
  std::vector<json> records;
  for (const auto& o : outcomes) {
    for (const auto& f : o.failures) {
      records.push_back({{"model", f.key.model},
                         {"method", std::string(to_string(f.key.method))},
                         {"question_id", f.key.question_id},
                         {"style", f.key.style},
                         {"variant", f.key.variant},
                         {"persona", f.key.persona.empty() ? json(nullptr) : json(f.key.persona)},
                         {"error", f.error}});
    }
  }
  write_json_lines(jsonl_path, records);
}

}  // namespace vprobe
