#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "vprobe/pipelines.hpp"

namespace vprobe {

/// One CSV field, quoted when it contains a comma, quote or newline.
std::string csv_field(std::string_view s);
std::string csv_line(const std::vector<std::string>& fields);

// Each writer returns the files it produced. Output bytes depend only on the inputs.

/// robustness.csv, robustness_prompt_pairs.csv, robustness_selection_pairs.csv,
/// robustness_long.csv, robustness_summary.json.
std::vector<std::filesystem::path> write_robustness_reports(const std::optional<RobustnessResult>& prompt,
                                                            const std::optional<RobustnessResult>& selection,
                                                            const std::vector<std::string>& notes,
                                                            const std::filesystem::path& dir);

/// alignment.csv, alignment_questions.csv, alignment_long.csv, alignment_summary.json.
std::vector<std::filesystem::path> write_alignment_reports(const AlignmentResult& result,
                                                           const std::filesystem::path& dir);

/// actions.csv, actions_points.csv, actions_long.csv, actions_summary.json.
std::vector<std::filesystem::path> write_actions_reports(const AgreementResult& result,
                                                         const std::filesystem::path& dir);

/// Per (model, method): expected, collected and failed grid points.
void write_completeness(const std::vector<CollectOutcome>& outcomes, const std::filesystem::path& csv_path);
void write_failures(const std::vector<CollectOutcome>& outcomes, const std::filesystem::path& jsonl_path);

}  // namespace vprobe
