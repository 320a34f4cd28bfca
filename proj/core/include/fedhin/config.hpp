#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "fedhin/experiment.hpp"

namespace fedhin {

/// Flat JSON object mirroring ExperimentConfig; absent keys keep defaults and
/// an empty document yields all defaults. Unknown keys and out-of-range
/// values raise config errors naming the key.
ExperimentConfig parse_config_text(std::string_view text);
ExperimentConfig parse_config(const std::filesystem::path& path);

/// Canonical JSON (every key, fixed order); parse_config_text round-trips it.
std::string config_to_json(const ExperimentConfig& config);

}  // namespace fedhin
