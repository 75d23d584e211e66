#pragma once

#include <string>
#include <vector>

#include "cli/config.hpp"

namespace phlab::cli {

/// A CSV data series. Cells are preformatted so output bytes are fixed.
struct Table {
  std::string name;  // file suffix: <operation>_<name>.csv
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  void add(std::vector<std::string> row) { rows.push_back(std::move(row)); }
  std::string csv() const;
};

/// Shortest round-trip representation of a double ("nan", "inf" spelled out).
std::string fmt(double v);
std::string fmt(std::size_t v);
std::string fmt(int v);

struct Warning {
  std::string operation;
  std::string parameter;  // affected parameter and range, e.g. "n in [9, 12]"
  std::string message;
};

struct Report {
  std::string operation;
  json result = json::object();
  std::vector<Warning> warnings;
  std::vector<Table> tables;
  /// Nonzero when the operation completed but its verdict is a model failure.
  int exit_code = 0;

  void warn(std::string parameter, std::string message) {
    warnings.push_back({operation, std::move(parameter), std::move(message)});
  }
};

/// The JSON document written for a report. Worker count and output paths are
/// left out so the bytes depend only on the model, experiment and seed.
json report_document(const Report& r, const ExperimentConfig& cfg);

}  // namespace phlab::cli
