#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tamperbench/errors.hpp"

#include <json.hpp>

namespace tamperbench {

// A batch experiment description. Kind-specific parameters live in `params`
// with defaults filled in; unknown fields are rejected by name.
struct ExperimentConfig {
  std::string kind;  // bias_attack | verify_closed_form | targeted | pac |
                     // budget_impossibility | bound_tables
  std::uint64_t seed = 0;
  std::string out_dir = ".";
  int jobs = 1;
  std::int64_t enum_budget = kDefaultEnumBudget;
  nlohmann::json params;

  // Parses and validates a config document. `seed_override` (CLI flag or the
  // TAMPERBENCH_SEED variable) wins over the file; a seed must come from
  // somewhere.
  static ExperimentConfig from_json(
      const nlohmann::json& j,
      std::optional<std::uint64_t> seed_override = std::nullopt);

  // The default config for a subcommand, params filled with the standard
  // grid for that experiment.
  static ExperimentConfig defaults(const std::string& kind, std::uint64_t seed);

  nlohmann::json to_json() const;
};

struct ExperimentReport {
  std::string csv_path;
  std::string summary_path;
  std::int64_t rows = 0;
  std::int64_t passed = 0;
  bool all_pass = false;
  double wall_clock_ms = 0;
};

// Runs the experiment grid, streaming CSV rows to <out>/<kind>.csv and a
// summary document to <out>/<kind>_summary.json. Rows are deterministic
// functions of (config, seed); the wall clock appears only in the summary.
ExperimentReport run(const ExperimentConfig& config);

// The (p, mu, nu) -> bounds table as CSV text (also emitted by the
// bound_tables experiment kind).
std::string emit_bound_tables(const std::vector<double>& p_grid,
                              const std::vector<double>& mu_grid,
                              const std::string& nu_mode, double nu_fixed);

// 12-significant-digit decimal formatting used in every CSV cell.
std::string csv_double(double v);

}  // namespace tamperbench
