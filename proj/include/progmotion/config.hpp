#pragma once

// Run configuration: sectioned key=value files ([model], [train], [data],
// [eval], [run]) with command-line overrides applied on top.

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "progmotion/training.hpp"

namespace progmotion {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct RunConfig {
  ModelConfig model;
  TrainConfig train;
  std::string data_manifest;  // no default; required by commands that read data
  std::size_t data_stride = 1;
  std::vector<double> horizons_ms;  // empty: every standard horizon that fits T_f
  Metric metric = Metric::kMpjpe;
  std::filesystem::path out = "run";

  RunConfig();
  bool operator==(const RunConfig&) const = default;
};

/// Applies "section.key=value" to `cfg`; unknown keys and malformed values throw ConfigError.
void apply_setting(RunConfig& cfg, const std::string& dotted_key, const std::string& value);

/// Reads a config file over `cfg` (which usually holds the defaults).
void apply_config_file(RunConfig& cfg, const std::filesystem::path& path);
void apply_config_text(RunConfig& cfg, const std::string& text);

/// Overrides of the form "section.key=value".
void apply_overrides(RunConfig& cfg, const std::vector<std::string>& overrides);

/// Canonical text form; parsing it back over defaults reproduces `cfg`.
std::string to_config_text(const RunConfig& cfg);

/// Every recognised "section.key".
std::vector<std::string> config_keys();

/// Semantics checks beyond parsing (delegates to ModelConfig/TrainConfig).
void validate(const RunConfig& cfg);

std::vector<double> resolved_horizons(const RunConfig& cfg, double fps);

}  // namespace progmotion
