#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "specpredict/predictor.hpp"

namespace specpredict {

/// A parsed scenario document plus the table paths it referenced, resolved
/// against the document's directory.
struct ScenarioFile {
  Scenario scenario;
  std::optional<std::filesystem::path> basic_table_path;
  std::optional<std::filesystem::path> clutter_table_path;
};

struct ParseOptions {
  /// Base for relative table paths.
  std::filesystem::path base_dir = ".";
  /// `range` only needs the transmitter side, so users may be absent.
  bool require_users = true;
};

/// Strict schema check. Unknown keys and out-of-range values throw
/// ValidationError carrying the JSON path, e.g. `users[0].loc_pct`.
ScenarioFile parse_scenario(const nlohmann::json& doc, const ParseOptions& options = {});
ScenarioFile load_scenario(const std::filesystem::path& path, bool require_users = true);

/// Canonical document; parse_scenario(scenario_to_json(f)) reproduces `f`.
nlohmann::json scenario_to_json(const ScenarioFile& file);

/// Command-line values that replace the corresponding `run` entries.
struct RunOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> n_steps;
  std::optional<std::string> mode;
  std::optional<std::size_t> n_replicas;

  bool empty() const noexcept { return !seed && !n_steps && !mode && !n_replicas; }
};

/// Applies overrides, re-validating the result. Errors name the flag.
void apply_overrides(ScenarioFile& file, const RunOverrides& overrides);
nlohmann::json overrides_to_json(const RunOverrides& overrides);

/// Shortest round-trip decimal that always shows a fraction or exponent ("0.0", "0.4").
std::string format_probability(double p);

}  // namespace specpredict
