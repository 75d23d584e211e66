#include "cli/report.hpp"

#include <charconv>
#include <cmath>

namespace phlab::cli {

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string fmt(std::size_t v) { return std::to_string(v); }
std::string fmt(int v) { return std::to_string(v); }

std::string Table::csv() const {
  std::string out;
  auto line = [&out](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out += ',';
      out += cells[i];
    }
    out += '\n';
  };
  line(header);
  for (const auto& r : rows) line(r);
  return out;
}

json report_document(const Report& r, const ExperimentConfig& cfg) {
  json doc;
  doc["schema"] = kReportSchema;
  doc["operation"] = r.operation;
  doc["config"] = {{"model", cfg.model}, {"experiment", cfg.experiment}, {"seed", cfg.seed}};
  json warnings = json::array();
  for (const auto& w : r.warnings)
    warnings.push_back({{"operation", w.operation}, {"parameter", w.parameter}, {"message", w.message}});
  doc["warnings"] = std::move(warnings);
  json files = json::array();
  for (const auto& t : r.tables) files.push_back(r.operation + "_" + t.name + ".csv");
  doc["tables"] = std::move(files);
  doc["result"] = r.result;
  return doc;
}

}  // namespace phlab::cli
