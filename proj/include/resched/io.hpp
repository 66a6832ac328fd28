#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "resched/experiments.hpp"
#include "resched/schedule_policy.hpp"

namespace resched {

inline constexpr std::string_view kPolicySchema = "resched.policy.v1";

/// Parses a JSON experiment config. Missing keys take defaults, unknown keys
/// and malformed values throw ConfigError. The result is validated.
ExperimentConfig parse_config(std::string_view json_text);
ExperimentConfig load_config(const std::string& path);

/// Canonical JSON (sorted keys, every field present). parse_config inverts it.
std::string config_to_json(const ExperimentConfig& config);

/// FNV-1a 64 over the canonical JSON, excluding output_dir and threads
/// (neither affects results). 16 lowercase hex digits.
std::string config_hash(const ExperimentConfig& config);

/// Checkpoint JSON: schema tag, variant, dimensions, row-major weights.
std::string policy_to_json(const PolicyParams& params);
/// Throws ConfigError for malformed or inconsistent checkpoints.
PolicyParams policy_from_json(std::string_view json_text);

void save_policy(const PolicyParams& params, const std::string& path);
PolicyParams load_policy(const std::string& path);

/// Whole-file helpers; failures throw Error (read: ConfigError).
std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, std::string_view contents);

/// Shortest round-tripping decimal for a double, as used in JSON output.
std::string format_double(double value);

}  // namespace resched
