#include "vprobe/pipelines.hpp"

#include <algorithm>
#include <set>
#include <tuple>

namespace vprobe {

namespace {

using ModelMethod = std::pair<std::string, Method>;

double mean_of(std::span<const double> xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return xs.empty() ? 0.0 : s / static_cast<double>(xs.size());
}

PairRecord compare(const ModelMethod& mm, const std::string& qid, const std::string& a, const std::string& b,
                   const Distribution& p, const Distribution& q) {
  PairRecord r;
  r.model = mm.first;
  r.method = mm.second;
  r.question_id = qid;
  r.condition_a = a;
  r.condition_b = b;
  r.mismatch = mismatch(p, q);
  r.js_divergence = js_divergence(p, q);
  r.js_distance = js_distance(p, q);
  return r;
}

// condition -> distribution, per question, per (model, method)
using ConditionTable = std::map<ModelMethod, std::map<std::string, std::map<std::string, Distribution>>>;

RobustnessResult pairwise(const ConditionTable& table, const std::string& what) {
  RobustnessResult out;
  for (const auto& [mm, questions] : table) {
    std::set<std::string> conditions;
    for (const auto& [_, by_cond] : questions) {
      for (const auto& [c, __] : by_cond) conditions.insert(c);
    }
    if (conditions.size() < 2) {
      out.notes.push_back(mm.first + "/" + std::string(to_string(mm.second)) + ": fewer than two " + what + "s, skipped");
      continue;
    }
    const std::vector<std::string> conds(conditions.begin(), conditions.end());
    RobustnessRow row;
    row.model = mm.first;
    row.method = mm.second;
    row.expected_pairs = questions.size() * conds.size() * (conds.size() - 1) / 2;
    std::vector<double> mism, jsd, jsv;
    for (const auto& [qid, by_cond] : questions) {
      for (std::size_t i = 0; i < conds.size(); ++i) {
        for (std::size_t j = i + 1; j < conds.size(); ++j) {
          const auto a = by_cond.find(conds[i]);
          const auto b = by_cond.find(conds[j]);
          if (a == by_cond.end() || b == by_cond.end()) continue;
          auto pr = compare(mm, qid, conds[i], conds[j], a->second, b->second);
          mism.push_back(pr.mismatch);
          jsd.push_back(pr.js_distance);
          jsv.push_back(pr.js_divergence);
          out.pairs.push_back(std::move(pr));
        }
      }
    }
    row.pairs = mism.size();
    if (row.pairs < row.expected_pairs) {
      out.notes.push_back(mm.first + "/" + std::string(to_string(mm.second)) + ": " + std::to_string(row.pairs) + " of " +
                          std::to_string(row.expected_pairs) + " " + what + " pairs available");
    }
    row.mismatch_rate = mean_of(mism);
    row.mean_js_distance = mean_of(jsd);
    row.mean_js_divergence = mean_of(jsv);
    out.rows.push_back(row);
  }
  return out;
}

// Generic representations of each question, grouped by (model, method).
std::map<ModelMethod, std::map<std::string, std::vector<Distribution>>> generic_reps(const RepStore& store) {
  std::map<ModelMethod, std::map<std::string, std::vector<Distribution>>> out;
  for (const auto& [k, rep] : store.all()) {
    if (k.persona.empty()) out[{k.model, k.method}][k.question_id].push_back(rep.probs);
  }
  return out;
}

}  // namespace

void RunGrid::validate() const {
  if (methods.empty()) throw ValidationError("grid: methods must be non-empty");
  if (styles.empty()) throw ValidationError("grid: styles must be non-empty");
  if (variants.empty()) throw ValidationError("grid: variants must be non-empty");
  std::set<Method> ms(methods.begin(), methods.end());
  if (ms.size() != methods.size()) throw ValidationError("grid: duplicate method");
  std::set<std::string> ids;
  for (const auto& s : styles) {
    validate_style(s);
    if (!ids.insert(s.id).second) throw ValidationError("grid: duplicate style " + s.id);
  }
  const auto& known = standard_variant_ids();
  std::set<std::string> vs;
  for (const auto& v : variants) {
    if (std::find(known.begin(), known.end(), v) == known.end()) throw ValidationError("grid: unknown variant " + v);
    if (!vs.insert(v).second) throw ValidationError("grid: duplicate variant " + v);
  }
  std::set<std::string> ps;
  for (const auto& p : personas) {
    if (p.empty()) throw ValidationError("grid: persona group must be non-empty");
    if (!ps.insert(p).second) throw ValidationError("grid: duplicate persona " + p);
  }
  validate_persona_template(persona_template);
  if (ms.contains(Method::Text)) {
    if (sampling.n < 1) throw ValidationError("grid: sampling.n must be >= 1");
    if (sampling.temperature < 0.0) throw ValidationError("grid: sampling.temperature must be >= 0");
    if (sampling.max_tokens < 1) throw ValidationError("grid: sampling.max_tokens must be >= 1");
  }
}

RepKey key_of(const ValueRepresentation& rep) {
  return {rep.provenance.model,   rep.method, rep.provenance.question_id, rep.provenance.style,
          rep.provenance.variant, rep.provenance.persona.value_or(std::string(kNoPersona))};
}

void RepStore::add(ValueRepresentation rep) {
  if (!is_distribution(rep.probs, 1e-6)) {
    throw ValidationError("representation for " + rep.provenance.question_id + " is not a probability vector");
  }
  auto key = key_of(rep);
  if (!reps_.emplace(key, std::move(rep)).second) {
    throw ValidationError("duplicate representation for " + key.model + "/" + std::string(to_string(key.method)) + "/" +
                          key.question_id + "/" + key.style + "/" + key.variant + "/" + key.persona);
  }
}

const ValueRepresentation* RepStore::find(const RepKey& key) const {
  auto it = reps_.find(key);
  return it == reps_.end() ? nullptr : &it->second;
}

std::size_t RepStore::count(Method m) const {
  return static_cast<std::size_t>(
      std::count_if(reps_.begin(), reps_.end(), [m](const auto& e) { return e.first.method == m; }));
}

std::vector<json> to_json_records(const RepStore& store) {
  std::vector<json> out;
  out.reserve(store.size());
  for (const auto& [_, rep] : store.all()) out.push_back(to_json(rep));
  return out;
}

RepStore load_reps(const std::filesystem::path& path) {
  RepStore store;
  for (const auto& rec : read_json_records(path)) {
    const std::string ctx = where(path, rec.line);
    try {
      store.add(rep_from_json(rec.value, ctx));
    } catch (const ValidationError& e) {
      const std::string msg = e.what();
      throw ValidationError(msg.starts_with(ctx) ? msg : ctx + ": " + msg);
    }
  }
  return store;
}

ValueRepresentation probe(const RenderedPrompt& rendered, Method method, Backend& backend,
                          const SamplingSettings& sampling) {
  ValueRepresentation rep;
  switch (method) {
    case Method::Token:
      rep = score_token(backend.next_token_logprobs(rendered.text, candidate_tokens(rendered)), rendered);
      break;
    case Method::Sequence: {
      std::vector<SequenceScore> scores;
      scores.reserve(rendered.size());
      for (const auto& seq : rendered.answer_sequences) scores.push_back(backend.sequence_logprob(rendered.text, " " + seq));
      rep = score_sequence(scores, &rendered);
      break;
    }
    case Method::Text: {
      const auto samples = backend.sample_text(rendered.text, sampling.n, sampling.temperature, sampling.max_tokens);
      rep = score_text(samples, rendered);
      break;
    }
  }
  rep.provenance.model = backend.model();
  return rep;
}

CollectOutcome collect_reps(const RunGrid& grid, const QuestionBank& bank, Backend& backend) {
  grid.validate();
  struct Point {
    std::size_t question;
    std::size_t style;
    std::size_t variant;
    std::optional<std::string> persona;
  };
  std::vector<Point> points;
  for (std::size_t q = 0; q < bank.questions.size(); ++q) {
    for (std::size_t s = 0; s < grid.styles.size(); ++s) {
      for (std::size_t v = 0; v < grid.variants.size(); ++v) {
        points.push_back({q, s, v, std::nullopt});
        for (const auto& g : grid.personas) points.push_back({q, s, v, g});
      }
    }
  }

  struct Result {
    std::vector<ValueRepresentation> reps;
    std::vector<GridFailure> failures;
  };
  std::vector<Result> results(points.size());
  backend.parallel_for(points.size(), [&](std::size_t i) {
    const Point& pt = points[i];
    const ValueQuestion& q = bank.questions[pt.question];
    const PromptStyle& style = grid.styles[pt.style];
    const std::string& variant_id = grid.variants[pt.variant];
    auto fail = [&](Method m, const std::string& msg, bool transport = false) {
      results[i].failures.push_back(
          {{backend.model(), m, q.id, style.id, variant_id, pt.persona.value_or(std::string(kNoPersona))}, msg, transport});
    };
    RenderedPrompt rendered;
    try {
      std::optional<Persona> persona;
      if (pt.persona) persona = Persona{*pt.persona, grid.persona_template};
      rendered = render(q, style, standard_variant(variant_id, q.size()), persona);
    } catch (const Error& e) {
      for (Method m : grid.methods) fail(m, e.what());
      return;
    }
    for (Method m : grid.methods) {
      try {
        results[i].reps.push_back(probe(rendered, m, backend, grid.sampling));
      } catch (const TransportError& e) {
        fail(m, e.what(), true);
      } catch (const Error& e) {
        fail(m, e.what());
      }
    }
  });

  CollectOutcome out;
  out.expected = points.size() * grid.methods.size();
  for (auto& r : results) {
    for (auto& rep : r.reps) out.store.add(std::move(rep));
    for (auto& f : r.failures) out.failures.push_back(std::move(f));
  }
  std::sort(out.failures.begin(), out.failures.end(), [](const auto& a, const auto& b) { return a.key < b.key; });
  return out;
}

RobustnessResult robustness_prompt(const RepStore& store, const std::string& identity_variant) {
  ConditionTable table;
  std::set<std::string> styles;
  for (const auto& [k, rep] : store.all()) {
    if (!k.persona.empty() || k.variant != identity_variant) continue;
    table[{k.model, k.method}][k.question_id][k.style] = rep.probs;
    styles.insert(k.style);
  }
  if (styles.size() < 2) {
    throw PreconditionError("prompt robustness needs at least two styles under variant '" + identity_variant + "'; found " +
                            std::to_string(styles.size()));
  }
  return pairwise(table, "style");
}

RobustnessResult robustness_selection(const RepStore& store) {
  std::map<ModelMethod, std::map<std::string, std::map<std::string, std::vector<Distribution>>>> grouped;
  std::set<std::string> variants;
  for (const auto& [k, rep] : store.all()) {
    if (!k.persona.empty()) continue;
    grouped[{k.model, k.method}][k.question_id][k.variant].push_back(rep.probs);
    variants.insert(k.variant);
  }
  if (variants.size() < 2) {
    throw PreconditionError("selection robustness needs at least two option variants; found " +
                            std::to_string(variants.size()));
  }
  ConditionTable table;
  for (const auto& [mm, questions] : grouped) {
    for (const auto& [qid, by_variant] : questions) {
      for (const auto& [variant, reps] : by_variant) table[mm][qid][variant] = mean_distribution(reps);
    }
  }
  return pairwise(table, "variant");
}

std::string_view to_string(AlignmentAggregation a) {
  return a == AlignmentAggregation::AverageReps ? "average_reps" : "average_scores";
}

AlignmentAggregation aggregation_from_string(std::string_view s) {
  if (s == "average_reps") return AlignmentAggregation::AverageReps;
  if (s == "average_scores") return AlignmentAggregation::AverageScores;
  throw ValidationError("unknown alignment aggregation '" + std::string(s) + "' (expected average_reps or average_scores)");
}

AlignmentPair alignment_pair(std::span<const Distribution> generic, std::span<const Distribution> persona,
                             const Distribution& human, AlignmentAggregation aggregation) {
  auto score = [&](std::span<const Distribution> reps) {
    if (reps.empty()) throw PreconditionError("alignment needs at least one representation");
    if (aggregation == AlignmentAggregation::AverageReps) return alignment(mean_distribution(reps), human).value;
    double s = 0.0;
    for (const auto& r : reps) s += alignment(r, human).value;
    return s / static_cast<double>(reps.size());
  };
  return {score(generic), score(persona)};
}

AlignmentResult demographic_alignment(const RepStore& store, const ReferenceMap& refs, AlignmentAggregation aggregation) {
  // (model, method) -> question -> persona -> reps
  std::map<ModelMethod, std::map<std::string, std::map<std::string, std::vector<Distribution>>>> grouped;
  bool any_persona = false;
  for (const auto& [k, rep] : store.all()) {
    grouped[{k.model, k.method}][k.question_id][k.persona].push_back(rep.probs);
    any_persona = any_persona || !k.persona.empty();
  }
  if (!any_persona) throw PreconditionError("demographic alignment needs representations probed with personas");

  AlignmentResult out;
  out.aggregation = aggregation;
  for (const auto& [mm, questions] : grouped) {
    std::map<std::string, std::vector<AlignmentPair>> per_group;
    std::vector<AlignmentPair> all;
    for (const auto& [qid, by_persona] : questions) {
      const auto generic = by_persona.find(std::string(kNoPersona));
      for (const auto& [group, reps] : by_persona) {
        if (group.empty()) continue;
        const std::string tag = mm.first + "/" + std::string(to_string(mm.second)) + "/" + qid + "/" + group;
        if (generic == by_persona.end()) {
          out.notes.push_back(tag + ": no generic representations, skipped");
          continue;
        }
        const auto ref = refs.find({qid, group});
        if (ref == refs.end()) {
          out.notes.push_back(tag + ": no human reference, skipped");
          continue;
        }
        const auto human = reference_distribution(ref->second);
        if (human.size() != reps.front().size()) {
          out.notes.push_back(tag + ": reference has a different option count, skipped");
          continue;
        }
        const auto pair = alignment_pair(generic->second, reps, human, aggregation);
        out.details.push_back({mm.first, mm.second, group, qid, pair});
        per_group[group].push_back(pair);
        all.push_back(pair);
      }
    }
    auto summarize = [&](const std::string& group, const std::vector<AlignmentPair>& pairs) {
      AlignmentRow row;
      row.model = mm.first;
      row.method = mm.second;
      row.group = group;
      row.questions = pairs.size();
      for (const auto& p : pairs) {
        row.alignment_generic += p.generic;
        row.alignment_persona += p.persona;
      }
      const double n = static_cast<double>(pairs.size());
      row.alignment_generic /= n;
      row.alignment_persona /= n;
      row.improvement = row.alignment_persona - row.alignment_generic;
      out.rows.push_back(row);
    };
    for (const auto& [group, pairs] : per_group) summarize(group, pairs);
    if (!all.empty()) summarize("all", all);
  }
  return out;
}

RatingOutcome collect_ratings(const std::vector<ScenarioRecord>& scenarios, Backend& backend,
                              const RatingSettings& settings) {
  const auto ids = scenario_ids(scenarios);
  std::vector<std::pair<std::size_t, Slot>> tasks;
  for (std::size_t i = 0; i < scenarios.size(); ++i) {
    if (!scenarios[i].verified) continue;
    tasks.emplace_back(i, Slot::A);
    tasks.emplace_back(i, Slot::B);
  }
  std::vector<std::vector<ActionRating>> results(tasks.size());
  std::vector<std::string> errors(tasks.size());
  backend.parallel_for(tasks.size(), [&](std::size_t t) {
    const auto [i, slot] = tasks[t];
    try {
      results[t] = rate_action(scenarios[i], ids[i], slot, backend, settings);
    } catch (const Error& e) {
      errors[t] = ids[i] + "/" + std::string(to_string(slot)) + ": " + e.what();
    }
  });
  RatingOutcome out;
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    for (auto& r : results[t]) out.ratings.push_back(std::move(r));
    if (!errors[t].empty()) out.notes.push_back(errors[t]);
  }
  const std::size_t unverified = scenarios.size() - tasks.size() / 2;
  if (unverified > 0) out.notes.push_back(std::to_string(unverified) + " unverified scenarios not rated");
  return out;
}

std::vector<ActionRating> load_ratings(const std::filesystem::path& path) {
  std::vector<ActionRating> out;
  for (const auto& rec : read_json_records(path)) out.push_back(rating_from_json(rec.value, where(path, rec.line)));
  return out;
}

void save_ratings(const std::vector<ActionRating>& ratings, const std::filesystem::path& path) {
  std::vector<json> records;
  records.reserve(ratings.size());
  for (const auto& r : ratings) records.push_back(to_json(r));
  write_json_lines(path, records);
}

AgreementResult action_agreement(const RepStore& store, const std::vector<ScenarioRecord>& scenarios,
                                 const std::vector<ActionRating>& ratings, const QuestionBank& bank) {
  const auto ids = scenario_ids(scenarios);
  std::map<std::tuple<std::string, std::string, Slot>, std::vector<double>> scores;
  for (const auto& r : ratings) {
    if (r.valid) scores[{r.model, r.scenario_id, r.slot}].push_back(r.score);
  }

  AgreementResult out;
  for (const auto& [mm, questions] : generic_reps(store)) {
    std::map<std::string, PoleWeights> weights;
    for (const auto& [qid, reps] : questions) weights[qid] = pole_weights(mean_distribution(reps));

    AgreementRow row;
    row.model = mm.first;
    row.method = mm.second;
    std::vector<double> xs, ys;
    std::size_t unrated = 0;
    for (std::size_t i = 0; i < scenarios.size(); ++i) {
      const ScenarioRecord& s = scenarios[i];
      if (!bank.find(s.question_id)) continue;
      const auto w = weights.find(s.question_id);
      if (w == weights.end()) continue;
      for (Slot slot : {Slot::A, Slot::B}) {
        const auto sc = scores.find({mm.first, ids[i], slot});
        if (sc == scores.end()) {
          ++unrated;
          continue;
        }
        const Pole pole = slot == Slot::A ? s.pole_a : s.pole_b;
        ActionPoint p{mm.first, mm.second, ids[i], slot, pole == Pole::Low ? w->second.low : w->second.high,
                      mean_of(sc->second)};
        xs.push_back(p.x);
        ys.push_back(p.y);
        out.points.push_back(std::move(p));
      }
    }
    if (unrated > 0) {
      out.notes.push_back(mm.first + "/" + std::string(to_string(mm.second)) + ": " + std::to_string(unrated) +
                          " actions without a valid rating");
    }
    row.n = xs.size();
    try {
      row.pearson = pearson(xs, ys);
      row.spearman = spearman(xs, ys);
    } catch (const Error& e) {
      row.error = e.what();
    }
    out.rows.push_back(std::move(row));
  }
  return out;
}

}  // namespace vprobe
