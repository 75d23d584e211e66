#pragma once

#include <string>
#include <vector>

#include "cli/config.hpp"
#include "cli/report.hpp"

namespace phlab::cli {

/// Operation names as they appear in configs, e.g. "semiconj-fiber".
const std::vector<std::string>& operation_names();

/// Runs one operation against the config. Throws ConfigError for bad
/// parameters and phlab::Error from the library.
Report run_operation(const std::string& operation, const ExperimentConfig& cfg);

}  // namespace phlab::cli
