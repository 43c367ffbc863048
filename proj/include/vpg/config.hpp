#pragma once

// Run configuration. Built-in defaults are mirrored in config/defaults.toml;
// a user TOML file overrides any subset of keys and unknown keys are rejected.

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "json.hpp"
#include "vpg/dataset.hpp"
#include "vpg/gnn.hpp"
#include "vpg/safemt.hpp"
#include "vpg/synthdata.hpp"

namespace vpg {

struct SplitOptions {
  std::array<double, 3> ratio{0.8, 0.1, 0.1};
  std::uint64_t seed = 0;
};

struct EvalOptions {
  int replicates = 2000;
  std::uint64_t seed = 0;
  double detect_temperature_K = 298.15;  // temperature of the VP column in compounds.csv
};

struct RunConfig {
  ModelConfig model;
  ScheduleConfig schedule;
  PrepareOptions prepare;
  SplitOptions split;
  SynthConfig synth;
  EvalOptions eval;

  void validate() const;  // ConfigError
  nlohmann::json to_json() const;
  static RunConfig from_json(const nlohmann::json& j);
  /// Stable hash of to_json().dump().
  std::string hash() const;
};

/// TOML document as JSON (tables -> objects, arrays -> arrays). ConfigError on syntax errors.
nlohmann::json toml_to_json(std::string_view text);
/// Defaults overridden by `text`. ConfigError for unknown keys or wrong types.
RunConfig parse_config_toml(std::string_view text);
RunConfig load_config(const std::filesystem::path& path);

nlohmann::json prepare_options_to_json(const PrepareOptions& p);
PrepareOptions prepare_options_from_json(const nlohmann::json& j);

}  // namespace vpg
