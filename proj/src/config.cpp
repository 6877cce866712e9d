#include "vprobe/config.hpp"

#include <map>

namespace vprobe {

namespace {

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() ? path : (base / path).lexically_normal();
}

template <typename T>
T field(const json& j, const char* key, T fallback, const std::string& ctx) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw SchemaError(ctx + ": field '" + key + "' has the wrong type");
  }
}

void require_object(const json& j, const std::string& ctx) {
  if (!j.is_object()) throw SchemaError(ctx + ": expected an object");
}

}  // namespace

RunConfig run_config_from_json(const json& j, const std::filesystem::path& base_dir) {
  require_object(j, "config");
  require_known_keys(j, {"seed", "paths", "probe", "generator", "critic", "styles", "grid", "rating", "alignment",
                         "scenarios"},
                     "config");
  RunConfig c;
  c.seed = field<std::uint64_t>(j, "seed", 0, "config");

  if (!j.contains("paths")) throw SchemaError("config: missing 'paths'");
  const json& paths = j.at("paths");
  require_object(paths, "config.paths");
  require_known_keys(paths, {"bank", "references", "scenarios", "out"}, "config.paths");
  if (!paths.contains("bank")) throw SchemaError("config.paths: missing 'bank'");
  c.bank = resolve(base_dir, field<std::string>(paths, "bank", "", "config.paths"));
  if (paths.contains("references")) c.references = resolve(base_dir, field<std::string>(paths, "references", "", "config.paths"));
  if (paths.contains("scenarios")) c.scenarios = resolve(base_dir, field<std::string>(paths, "scenarios", "", "config.paths"));
  c.out = resolve(base_dir, field<std::string>(paths, "out", "run", "config.paths"));

  if (j.contains("probe")) {
    const json& probe = j.at("probe");
    if (probe.is_array()) {
      for (std::size_t i = 0; i < probe.size(); ++i) {
        c.probe.push_back(backend_config_from_json(probe.at(i), "config.probe[" + std::to_string(i) + "]"));
      }
    } else {
      c.probe.push_back(backend_config_from_json(probe, "config.probe"));
    }
  }
  if (j.contains("generator")) c.generator = backend_config_from_json(j.at("generator"), "config.generator");
  if (j.contains("critic")) c.critic = backend_config_from_json(j.at("critic"), "config.critic");

  std::map<std::string, PromptStyle> styles;
  for (const auto& s : builtin_styles()) styles[s.id] = s;
  if (j.contains("styles")) {
    if (!j.at("styles").is_array()) throw SchemaError("config.styles: expected an array");
    for (const auto& s : j.at("styles")) {
      auto style = style_from_json(s, "config.styles");
      styles[style.id] = std::move(style);
    }
  }

  if (j.contains("grid")) {
    const json& g = j.at("grid");
    const std::string ctx = "config.grid";
    require_object(g, ctx);
    require_known_keys(g, {"methods", "styles", "variants", "personas", "persona_template", "sampling"}, ctx);
    if (g.contains("methods")) {
      c.grid.methods.clear();
      for (const auto& m : field<std::vector<std::string>>(g, "methods", {}, ctx)) {
        try {
          c.grid.methods.push_back(method_from_string(m));
        } catch (const Error& e) {
          throw ValidationError(ctx + ": " + e.what());
        }
      }
    }
    if (g.contains("styles")) {
      c.grid.styles.clear();
      for (const auto& id : field<std::vector<std::string>>(g, "styles", {}, ctx)) {
        auto it = styles.find(id);
        if (it == styles.end()) throw ValidationError(ctx + ": unknown style '" + id + "'");
        c.grid.styles.push_back(it->second);
      }
    }
    if (g.contains("variants")) c.grid.variants = field<std::vector<std::string>>(g, "variants", {}, ctx);
    if (g.contains("personas")) {
      if (g.at("personas").is_string()) {
        if (g.at("personas").get<std::string>() != "references") {
          throw ValidationError(ctx + ": personas must be a list of groups or the string \"references\"");
        }
        c.personas_from_references = true;
      } else {
        c.grid.personas = field<std::vector<std::string>>(g, "personas", {}, ctx);
      }
    }
    c.grid.persona_template = field<std::string>(g, "persona_template", c.grid.persona_template, ctx);
    if (g.contains("sampling")) {
      const json& s = g.at("sampling");
      require_object(s, ctx + ".sampling");
      require_known_keys(s, {"n", "temperature", "max_tokens"}, ctx + ".sampling");
      c.grid.sampling.n = field<int>(s, "n", c.grid.sampling.n, ctx + ".sampling");
      c.grid.sampling.temperature = field<double>(s, "temperature", c.grid.sampling.temperature, ctx + ".sampling");
      c.grid.sampling.max_tokens = field<int>(s, "max_tokens", c.grid.sampling.max_tokens, ctx + ".sampling");
    }
  }
  try {
    c.grid.validate();
  } catch (const ValidationError& e) {
    throw ValidationError(std::string("config.grid: ") + e.what());
  }

  if (j.contains("rating")) {
    const json& r = j.at("rating");
    require_object(r, "config.rating");
    require_known_keys(r, {"n", "temperature", "max_tokens"}, "config.rating");
    c.rating.n = field<int>(r, "n", c.rating.n, "config.rating");
    c.rating.temperature = field<double>(r, "temperature", c.rating.temperature, "config.rating");
    c.rating.max_tokens = field<int>(r, "max_tokens", c.rating.max_tokens, "config.rating");
    if (c.rating.n < 1 || c.rating.temperature < 0.0 || c.rating.max_tokens < 1) {
      throw ValidationError("config.rating: n and max_tokens must be >= 1 and temperature >= 0");
    }
  }
  if (j.contains("alignment")) {
    const json& a = j.at("alignment");
    require_object(a, "config.alignment");
    require_known_keys(a, {"aggregation"}, "config.alignment");
    c.aggregation = aggregation_from_string(field<std::string>(a, "aggregation", "average_reps", "config.alignment"));
  }
  if (j.contains("scenarios")) {
    const json& s = j.at("scenarios");
    require_object(s, "config.scenarios");
    require_known_keys(s, {"per_question", "temperature", "max_tokens"}, "config.scenarios");
    c.scenario_settings.per_question = field<std::size_t>(s, "per_question", 10, "config.scenarios");
    c.scenario_settings.temperature = field<double>(s, "temperature", 1.0, "config.scenarios");
    c.scenario_settings.max_tokens = field<int>(s, "max_tokens", 2048, "config.scenarios");
    if (c.scenario_settings.per_question < 1) throw ValidationError("config.scenarios: per_question must be >= 1");
  }
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw ValidationError("config file not found: " + path.string());
  json j;
  try {
    j = json::parse(read_text_file(path));
  } catch (const json::parse_error& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
  return run_config_from_json(j, path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path());
}

}  // namespace vprobe
