#pragma once

#include <chrono>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "xlf/backends.hpp"
#include "xlf/pipeline.hpp"

namespace xlf {

/// Which named backends a strategy uses.
struct StrategyAssignment {
  bool enabled = true;
  std::string translator;
  std::string corrector;  ///< empty: the translator corrects
  std::string paraphraser;
  std::string llm;
};

/// Contents of a run configuration file (`"version": 1`).
struct RunConfig {
  std::optional<std::string> corpus;
  std::string source_language = "en";
  std::string target_language = "hi";
  std::map<std::string, BackendConfig> backends;
  std::map<StrategyId, StrategyAssignment> strategies;
  GatePolicy gate;
  std::optional<std::string> plugin_cmd;
  double plugin_timeout_seconds = 120.0;
  std::optional<std::string> cache_dir;
  std::optional<std::string> output_dir;
  int max_parallel_articles = 4;

  /// Throws ConfigError on dangling backend references or invalid values.
  void validate() const;
};

/// Throws ConfigError on unknown keys, wrong types or a missing/unsupported version.
RunConfig parse_run_config(const nlohmann::json& j);
RunConfig parse_run_config_text(std::string_view text);

/// All three strategies on a single exact mock backend named "mock".
RunConfig default_mock_config();

/// Applies one `--backends` value:
///   `mock`                replace every backend with an exact mock
///   `<name>=mock[:mode]`  turn backend `name` into a mock
///   `<name>=<endpoint>`   set backend `name`'s endpoint
/// Throws ConfigError for an unknown name or a malformed value.
void apply_backend_override(RunConfig& config, std::string_view spec);

/// Serialization without secrets (api keys dropped).
nlohmann::json to_json(const RunConfig& config);

/// One Backend instance per configured name, shared between strategies.
std::map<StrategyId, StrategyBackends> build_strategies(const RunConfig& config, const BackendServices& services);

}  // namespace xlf
