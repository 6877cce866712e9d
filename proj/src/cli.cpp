#include "vprobe/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <map>
#include <optional>

#include <CLI11.hpp>

#include "vprobe/config.hpp"
#include "vprobe/mock_backend.hpp"
#include "vprobe/reports.hpp"

namespace vprobe {

namespace fs = std::filesystem;

namespace {

struct GlobalOptions {
  std::string config;
  bool mock = false;
  std::optional<std::uint64_t> seed;
  std::string out;
};

struct RunLayout {
  fs::path root;
  fs::path reps() const { return root / "reps" / "reps.jsonl"; }
  fs::path completeness() const { return root / "reps" / "completeness.csv"; }
  fs::path failures() const { return root / "reps" / "failures.jsonl"; }
  fs::path ratings() const { return root / "ratings" / "ratings.jsonl"; }
  fs::path reports() const { return root / "reports"; }
  fs::path cache() const { return root / "cache" / "responses.jsonl"; }
  fs::path scenarios() const { return root / "scenarios" / "scenarios.jsonl"; }
};

class Session {
 public:
  Session(const GlobalOptions& opts, std::ostream& out, std::ostream& err) : opts_(opts), out_(out), err_(err) {
    if (opts_.config.empty()) throw ValidationError("--config is required for this command");
    config_ = load_run_config(opts_.config);
    if (opts_.seed) config_.seed = *opts_.seed;
    if (!opts_.out.empty()) config_.out = opts_.out;
    layout_.root = config_.out;
  }

  const RunConfig& config() const { return config_; }
  const RunLayout& layout() const { return layout_; }

  const QuestionBank& bank() {
    if (!bank_) {
      require_file(config_.bank, "question bank");
      bank_ = load_question_bank(config_.bank);
    }
    return *bank_;
  }

  /// Empty when no reference file is configured and `required` is false.
  const ReferenceMap& references(bool required) {
    if (!refs_) {
      if (!config_.references) {
        if (required) throw ValidationError("no references file configured (paths.references)");
        refs_ = ReferenceMap{};
      } else {
        require_file(*config_.references, "references");
        refs_ = load_references(*config_.references, bank());
      }
    }
    return *refs_;
  }

  fs::path scenarios_path() const { return config_.scenarios ? *config_.scenarios : layout_.scenarios(); }

  std::vector<ScenarioRecord> scenarios(bool required) {
    const fs::path p = scenarios_path();
    if (!fs::exists(p)) {
      if (required) throw ValidationError("scenario file not found: " + p.string());
      return {};
    }
    return load_scenarios(p, bank());
  }

  std::shared_ptr<ResponseCache> cache() {
    if (!cache_) {
      fs::create_directories(layout_.cache().parent_path());
      cache_ = std::make_shared<ResponseCache>(layout_.cache());
      if (cache_->corrupt_lines() > 0) {
        err_ << "warning: skipped " << cache_->corrupt_lines() << " corrupt cache lines in " << layout_.cache().string()
             << "\n";
      }
    }
    return cache_;
  }

  std::unique_ptr<Backend> backend(BackendConfig cfg, const MockContext& context) {
    if (opts_.mock) cfg.kind = BackendKind::Mock;
    if (cfg.kind == BackendKind::Mock) {
      if (cfg.mock.is_null()) cfg.mock = json::object();
      if (!cfg.mock.is_object()) throw SchemaError("backend " + cfg.model + ": mock spec must be an object");
      if (!cfg.mock.contains("seed")) cfg.mock["seed"] = config_.seed;
    }
    auto b = make_backend(cfg, cache(), context);
    b->set_sampling_seed(config_.seed);
    return b;
  }

  static void require_file(const fs::path& p, const std::string& what) {
    if (!fs::exists(p)) throw ValidationError(what + " file not found: " + p.string());
  }

 private:
  GlobalOptions opts_;
  std::ostream& out_;
  std::ostream& err_;
  RunConfig config_;
  RunLayout layout_;
  std::optional<QuestionBank> bank_;
  std::optional<ReferenceMap> refs_;
  std::shared_ptr<ResponseCache> cache_;
};

std::string calls_line(const Backend& b) {
  const std::size_t calls = b.backend_calls();
  std::string line = std::to_string(calls) + " backend calls";
  if (calls == 0) line += " (cache hit)";
  return line + ", " + std::to_string(b.cache_hits()) + " cache hits";
}

void print_notes(std::ostream& err, const std::vector<std::string>& notes, std::size_t limit = 20) {
  for (std::size_t i = 0; i < notes.size() && i < limit; ++i) err << "note: " << notes[i] << "\n";
  if (notes.size() > limit) err << "note: ... " << notes.size() - limit << " more\n";
}

int cmd_probe(Session& s, std::ostream& out, std::ostream& err) {
  const RunConfig& c = s.config();
  if (c.probe.empty()) throw ValidationError("no probe backend configured (probe)");
  const QuestionBank& bank = s.bank();
  const ReferenceMap& refs = s.references(c.personas_from_references);
  RunGrid grid = c.grid;
  if (c.personas_from_references) grid.personas = reference_groups(refs);
  const auto scenarios = s.scenarios(false);
  const MockContext context{bank, refs, scenarios};
  const bool rate = std::any_of(scenarios.begin(), scenarios.end(), [](const auto& r) { return r.verified; });

  std::vector<CollectOutcome> outcomes;
  std::vector<ActionRating> ratings;
  RepStore combined;
  bool transport_only = true;
  for (const auto& cfg : c.probe) {
    auto backend = s.backend(cfg, context);
    auto outcome = collect_reps(grid, bank, *backend);
    std::size_t transport = 0;
    for (const auto& f : outcome.failures) transport += f.transport ? 1 : 0;
    if (outcome.store.size() > 0 || transport == 0) transport_only = false;
    out << "probe: " << backend->model() << ": " << outcome.store.size() << "/" << outcome.expected
        << " representations";
    for (Method m : grid.methods) out << ", " << to_string(m) << " " << outcome.store.count(m);
    out << "; " << outcome.failures.size() << " failed\n";
    for (std::size_t i = 0; i < outcome.failures.size() && i < 10; ++i) {
      const auto& f = outcome.failures[i];
      err << "failed: " << f.key.question_id << "/" << to_string(f.key.method) << "/" << f.key.style << "/"
          << f.key.variant << "/" << (f.key.persona.empty() ? "-" : f.key.persona) << ": " << f.error << "\n";
    }
    if (rate) {
      auto rated = collect_ratings(scenarios, *backend, c.rating);
      print_notes(err, rated.notes);
      out << "ratings: " << backend->model() << ": " << rated.ratings.size() << " ratings\n";
      for (auto& r : rated.ratings) ratings.push_back(std::move(r));
    }
    out << backend->model() << ": " << calls_line(*backend) << "\n";
    for (const auto& [_, rep] : outcome.store.all()) combined.add(rep);
    outcomes.push_back(std::move(outcome));
  }
  write_json_lines(s.layout().reps(), to_json_records(combined));
  write_completeness(outcomes, s.layout().completeness());
  write_failures(outcomes, s.layout().failures());
  if (rate) save_ratings(ratings, s.layout().ratings());
  out << "wrote " << s.layout().reps().string() << "\n";
  if (transport_only) {
    err << "error: every failed grid point was a transport failure\n";
    return kExitTransport;
  }
  return kExitOk;
}

RepStore load_run_reps(Session& s) {
  const fs::path p = s.layout().reps();
  if (!fs::exists(p)) throw ValidationError("representations not found: " + p.string() + " (run probe first)");
  return load_reps(p);
}

void list_files(std::ostream& out, const std::vector<fs::path>& files) {
  for (const auto& f : files) out << "wrote " << f.string() << "\n";
}

int cmd_report_robustness(Session& s, std::ostream& out, std::ostream& err) {
  const RepStore reps = load_run_reps(s);
  std::optional<RobustnessResult> prompt, selection;
  std::vector<std::string> notes;
  try {
    prompt = robustness_prompt(reps);
  } catch (const PreconditionError& e) {
    notes.push_back(std::string("prompt robustness skipped: ") + e.what());
  }
  try {
    selection = robustness_selection(reps);
  } catch (const PreconditionError& e) {
    notes.push_back(std::string("selection robustness skipped: ") + e.what());
  }
  if (!prompt && !selection) throw PreconditionError(notes.front() + "; " + notes.back());
  print_notes(err, notes);
  if (prompt) print_notes(err, prompt->notes);
  if (selection) print_notes(err, selection->notes);
  list_files(out, write_robustness_reports(prompt, selection, notes, s.layout().reports()));
  return kExitOk;
}

int cmd_report_alignment(Session& s, std::ostream& out, std::ostream& err) {
  const RepStore reps = load_run_reps(s);
  const auto result = demographic_alignment(reps, s.references(true), s.config().aggregation);
  print_notes(err, result.notes);
  list_files(out, write_alignment_reports(result, s.layout().reports()));
  return kExitOk;
}

int cmd_report_actions(Session& s, std::ostream& out, std::ostream& err) {
  const RepStore reps = load_run_reps(s);
  const auto scenarios = s.scenarios(true);
  const fs::path rp = s.layout().ratings();
  if (!fs::exists(rp)) throw ValidationError("ratings not found: " + rp.string() + " (run probe with verified scenarios)");
  const auto result = action_agreement(reps, scenarios, load_ratings(rp), s.bank());
  print_notes(err, result.notes);
  for (const auto& r : result.rows) {
    if (!r.error.empty()) err << "warning: " << r.model << "/" << to_string(r.method) << ": " << r.error << "\n";
  }
  list_files(out, write_actions_reports(result, s.layout().reports()));
  return kExitOk;
}

int cmd_scenarios(Session& s, std::ostream& out, std::ostream& err) {
  const RunConfig& c = s.config();
  if (!c.generator) throw ValidationError("no generator backend configured (generator)");
  const QuestionBank& bank = s.bank();
  const MockContext context{bank, {}, {}};
  auto generator = s.backend(*c.generator, context);
  auto generated = generate_scenarios(bank, *generator, c.scenario_settings.temperature, c.scenario_settings.max_tokens);
  print_notes(err, generated.notes);

  std::vector<ScenarioRecord> records;
  std::map<std::string, std::size_t> per_question;
  for (auto& r : generated.records) {
    if (per_question[r.question_id]++ < c.scenario_settings.per_question) records.push_back(std::move(r));
  }
  out << "scenarios: generated " << records.size() << " records for " << bank.questions.size() << " questions ("
      << generated.questions_failed << " questions failed)\n";

  if (!c.critic) {
    err << "warning: no critic configured; writing unverified scenarios\n";
  } else {
    auto critic = s.backend(*c.critic, context);
    const std::size_t total = records.size();
    auto filtered = filter_scenarios(records, bank, *critic);
    records = std::move(filtered.kept);
    const double retention = total ? 100.0 * static_cast<double>(records.size()) / static_cast<double>(total) : 0.0;
    out << "scenarios: kept " << records.size() << ", dropped " << filtered.dropped << ", unverifiable "
        << filtered.unverifiable << " (retention " << format_double(retention) << "%)\n";
    out << critic->model() << ": " << calls_line(*critic) << "\n";
  }
  out << generator->model() << ": " << calls_line(*generator) << "\n";
  const fs::path dest = s.layout().scenarios();
  save_scenarios(records, dest);
  out << "wrote " << dest.string() << "\n";
  return kExitOk;
}

int cmd_cache_verify(const GlobalOptions& g, const std::string& file, std::ostream& out, std::ostream& err) {
  fs::path path = file;
  if (path.empty()) {
    if (!g.out.empty()) {
      path = RunLayout{g.out}.cache();
    } else if (!g.config.empty()) {
      path = RunLayout{load_run_config(g.config).out}.cache();
    } else {
      throw ValidationError("cache verify needs --file, --out or --config");
    }
  }
  if (!fs::exists(path)) throw ValidationError("cache file not found: " + path.string());
  const auto report = verify_cache_file(path);
  out << "cache " << path.string() << ": " << report.records << " records, " << report.corrupt << " corrupt, "
      << report.duplicates << " duplicates, " << report.conflicts << " conflicts\n";
  if (!report.ok()) {
    err << "error: cache verification failed\n";
    return kExitUsage;
  }
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Probe language models for value representations and measure their robustness and expressiveness.",
               "vprobe"};
  app.require_subcommand(1);
  app.fallthrough();
  GlobalOptions g;
  app.add_option("--config", g.config, "Run configuration (JSON)");
  app.add_flag("--mock", g.mock, "Replace every configured backend with its mock spec");
  app.add_option("--seed", g.seed, "Override the run seed");
  app.add_option("--out", g.out, "Override the run directory");

  auto* probe = app.add_subcommand("probe", "Collect value representations over the configured grid");
  auto* report = app.add_subcommand("report", "Compute reports from a probed run");
  report->require_subcommand(1);
  report->fallthrough();
  auto* robustness = report->add_subcommand("robustness", "Prompt and selection robustness");
  auto* align = report->add_subcommand("alignment", "Demographic alignment against human references");
  auto* actions = report->add_subcommand("actions", "Value-action agreement");
  auto* scenarios = app.add_subcommand("scenarios", "Generate and verify value scenarios");
  auto* cache = app.add_subcommand("cache", "Response cache tools");
  cache->require_subcommand(1);
  cache->fallthrough();
  auto* verify = cache->add_subcommand("verify", "Check a cache file for corrupt or conflicting records");
  std::string cache_file;
  verify->add_option("--file", cache_file, "Cache file (default: <run>/cache/responses.jsonl)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (verify->parsed()) return cmd_cache_verify(g, cache_file, out, err);
    Session session(g, out, err);
    if (probe->parsed()) return cmd_probe(session, out, err);
    if (robustness->parsed()) return cmd_report_robustness(session, out, err);
    if (align->parsed()) return cmd_report_alignment(session, out, err);
    if (actions->parsed()) return cmd_report_actions(session, out, err);
    if (scenarios->parsed()) return cmd_scenarios(session, out, err);
  } catch (const TransportError& e) {
    err << "error: " << e.what() << "\n";
    return kExitTransport;
  } catch (const EmptyResponseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitTransport;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace vprobe
