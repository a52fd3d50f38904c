#pragma once

#include "npplab/harness.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace npplab {

inline constexpr int kConfigSchemaVersion = 1;

// JSON <-> config structs. Parsing is strict: unknown keys, wrong types and a
// missing or wrong "schema_version" raise ConfigError naming the offending key.
nlohmann::json to_json(const SyntheticSpec& spec);
nlohmann::json to_json(const ExperimentConfig& config);
nlohmann::json to_json(const SweepSpec& sweep);

SyntheticSpec synthetic_spec_from_json(const nlohmann::json& j);
ExperimentConfig experiment_config_from_json(const nlohmann::json& j);
SweepSpec sweep_spec_from_json(const nlohmann::json& j);

// ConfigError when the file is missing or not valid JSON.
nlohmann::json load_json_file(const std::filesystem::path& path);

// Applies "a.b.c=value" overrides in order. The value is parsed as JSON when
// possible, otherwise taken as a string. Intermediate objects are created, so
// typos surface later as unknown keys.
void apply_overrides(nlohmann::json& j, const std::vector<std::string>& overrides);

// 16 hex digits of FNV-1a over the canonical (sorted-key) JSON dump.
std::string fingerprint(const nlohmann::json& j);
std::string fingerprint(const ExperimentConfig& config);

}  // namespace npplab
