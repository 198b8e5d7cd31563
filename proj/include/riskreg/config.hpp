#pragma once

#include <string>

#include "riskreg/bench.hpp"

namespace riskreg {

inline constexpr int kConfigVersion = 1;

/// JSON study configuration. Unknown keys are rejected so typos cannot
/// silently fall back to defaults. See docs/config.md for the schema.
StudyConfig parse_study_config(const std::string& text);
StudyConfig load_study_config(const std::string& path);
/// Writes every field, including defaults; parse(to_json(c)) == c.
std::string to_json(const StudyConfig& config);

}  // namespace riskreg
