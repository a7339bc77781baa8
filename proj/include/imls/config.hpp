#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "imls/optimize.hpp"

namespace imls {

// key=value lines, '#' comments, whitespace trimmed
std::map<std::string, std::string> parse_config_file(const std::filesystem::path& path);

// Applies settings onto a config. Unknown keys are rejected by name. Called
// once with the file map and again with the flag map, so flags win over the
// file and the file wins over defaults.
void apply_config(ReconstructionConfig& cfg, const std::map<std::string, std::string>& kv);

}  // namespace imls
