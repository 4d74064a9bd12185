#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "swapsim/experiments.h"

namespace swapsim {

// YAML configuration. Unknown keys, type mismatches and constraint
// violations raise ConfigError naming the key.
ExperimentConfig parse_config_text(std::string_view yaml);
ExperimentConfig parse_config(const std::string& path);

// Full YAML snapshot; parse_config_text(emit_config(c)) == c.
std::string emit_config(const ExperimentConfig& cfg);

const std::vector<std::string>& preset_names();
ExperimentConfig preset_config(const std::string& name);

std::string setup_name(SetupKind k);
SetupKind parse_setup(const std::string& name);

}  // namespace swapsim
