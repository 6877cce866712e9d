#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "vprobe/backend.hpp"
#include "vprobe/pipelines.hpp"
#include "vprobe/scenarios.hpp"

namespace vprobe {

struct ScenarioSettings {
  std::size_t per_question = 10;  // records kept per question, in generation order
  double temperature = 1.0;
  int max_tokens = 2048;
};

/// Single JSON document driving every command. Unknown keys are rejected at every level.
struct RunConfig {
  std::uint64_t seed = 0;
  std::filesystem::path bank;
  std::optional<std::filesystem::path> references;
  std::optional<std::filesystem::path> scenarios;
  std::filesystem::path out;

  std::vector<BackendConfig> probe;
  std::optional<BackendConfig> generator;
  std::optional<BackendConfig> critic;

  RunGrid grid;
  bool personas_from_references = false;  // grid.personas given as "references"
  RatingSettings rating;
  AlignmentAggregation aggregation = AlignmentAggregation::AverageReps;
  ScenarioSettings scenario_settings;
};

/// Relative paths resolve against `base_dir`.
RunConfig run_config_from_json(const json& j, const std::filesystem::path& base_dir);
RunConfig load_run_config(const std::filesystem::path& path);

}  // namespace vprobe
