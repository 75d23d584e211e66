#pragma once

// Experiment configuration: a JSON document with model, experiment and
// execution blocks. Parameters are read through Params, which remembers which
// keys were consumed so that typos surface as configuration errors.

#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "phlab/disintegration.hpp"
#include "phlab/foliation.hpp"
#include "phlab/kan.hpp"
#include "phlab/map_models.hpp"

namespace phlab::cli {

using json = nlohmann::ordered_json;

inline constexpr const char* kConfigSchema = "phlab.config/1";
inline constexpr const char* kReportSchema = "phlab.report/1";

/// Malformed or out-of-range configuration (exit code 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class Params {
 public:
  Params() : Params(json::object(), "") {}
  Params(json object, std::string path);

  const json& raw() const { return obj_; }
  bool has(const std::string& key) const { return obj_.contains(key); }

  double number(const std::string& key, double fallback);
  std::int64_t integer(const std::string& key, std::int64_t fallback);
  /// Integer in [lo, hi].
  std::int64_t integer(const std::string& key, std::int64_t fallback, std::int64_t lo,
                       std::int64_t hi);
  std::size_t count(const std::string& key, std::size_t fallback, std::size_t lo = 1);
  double positive(const std::string& key, double fallback);
  std::string text(const std::string& key, const std::string& fallback);
  bool flag(const std::string& key, bool fallback);
  std::vector<double> numbers(const std::string& key, const std::vector<double>& fallback);
  Vec3 vec3(const std::string& key, const Vec3& fallback);
  /// Nested object; missing keys give an empty block.
  Params block(const std::string& key);

  /// Throws ConfigError naming the first key nobody read.
  void finish() const;

  [[noreturn]] void fail(const std::string& key, const std::string& why) const;

 private:
  const json* find(const std::string& key);

  json obj_;
  std::string path_;
  std::set<std::string> used_;
};

struct ExperimentConfig {
  json model = json::object();
  json experiment = json::object();
  std::uint64_t seed = 0;
  int workers = 1;
  std::string out;  // directory; empty means the report goes to stdout
};

/// Parses a config document. Throws ConfigError.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

/// "linear", "da" or "kan".
std::string model_kind(const json& model);
/// Linear and DA models. Throws ConfigError for shape problems and the model's
/// own errors (InvalidModel, WrongSignature, ...) for rejected parameters.
DAMap build_torus_model(const json& model);
/// Kan model, validated. Throws ConditionViolated.
KanMap build_kan_model(const json& model);

/// Leaf and half-length defaults follow the foliation: u boxes get W = 0.25
/// with 17 leaf nodes, curve boxes W = 0.5 with 65.
BoxSpec read_box(Params p, int workers, Foliation default_foliation = Foliation::Center);
SamplerSpec read_sampler(Params p, std::uint64_t seed, int workers);
BinSpec read_bins(Params p, BinSpec defaults = {});

}  // namespace phlab::cli
