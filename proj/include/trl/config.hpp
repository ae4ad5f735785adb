#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "trl/harness.hpp"

namespace trl {

/// Parses an experiment config. Unknown keys, wrong types and out-of-range
/// values all throw kInvalidConfig naming the field.
ExperimentConfig parse_experiment_config(const nlohmann::json& doc);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

DelayDistribution parse_delay(const nlohmann::json& doc, const std::string& where);
nlohmann::json delay_to_json(const DelayDistribution& delay);

/// "0..9" (inclusive range) or "0,3,7".
std::vector<std::uint64_t> parse_seed_list(const std::string& text);

}  // namespace trl
