#include "cli/app.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cli/config.hpp"
#include "cli/operations.hpp"
#include "cli/report.hpp"
#include "phlab/error.hpp"

namespace phlab::cli {

namespace {

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::string out;
  std::vector<std::string> params;  // key=value overrides of the experiment block
  std::optional<double> kan_a;
  std::optional<double> kan_s;
};

/// Values are parsed as JSON when possible ("12", "[0.1,0.2]", "true") and
/// taken as strings otherwise. Dotted keys reach into nested blocks.
void apply_param(json& experiment, const std::string& kv) {
  const auto eq = kv.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("--param expects key=value, got '" + kv + "'");
  const std::string key = kv.substr(0, eq), text = kv.substr(eq + 1);
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  json* node = &experiment;
  std::size_t start = 0;
  for (;;) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw ConfigError("--param has an empty key segment in '" + key + "'");
    if (dot == std::string::npos) {
      (*node)[part] = value;
      return;
    }
    if (!node->contains(part)) (*node)[part] = json::object();
    node = &(*node)[part];
    if (!node->is_object()) throw ConfigError("--param: '" + part + "' is not a block");
    start = dot + 1;
  }
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot write " + path.string());
  f << text;
}

int execute(const std::string& operation, const Globals& g, std::ostream& out, std::ostream& err) {
  const auto t0 = std::chrono::steady_clock::now();
  ExperimentConfig cfg = g.config.empty() ? ExperimentConfig{} : load_config(g.config);
  if (g.seed) cfg.seed = *g.seed;
  if (g.workers) cfg.workers = *g.workers;
  if (!g.out.empty()) cfg.out = g.out;
  if (!cfg.model.is_object()) cfg.model = json::object();
  const bool kan = operation.rfind("kan-", 0) == 0;
  if (kan && !cfg.model.contains("kind")) cfg.model["kind"] = "kan";
  if (g.kan_a) cfg.model["a"] = *g.kan_a;
  if (g.kan_s) cfg.model["s"] = *g.kan_s;
  for (const auto& kv : g.params) apply_param(cfg.experiment, kv);

  const Report r = run_operation(operation, cfg);
  const std::string doc = report_document(r, cfg).dump(2) + "\n";
  if (!cfg.out.empty()) {
    const std::filesystem::path dir(cfg.out);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw ConfigError("cannot create output directory " + cfg.out + ": " + ec.message());
    write_file(dir / (operation + ".json"), doc);
    for (const auto& t : r.tables) write_file(dir / (operation + "_" + t.name + ".csv"), t.csv());
  }
  out << doc;
  for (const auto& w : r.warnings) err << "warning: " << w.operation << ": " << w.parameter << ": " << w.message << "\n";
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  err << "phlab: " << operation << " finished in " << secs << " s\n";
  if (r.exit_code != 0 && r.result.contains("message"))
    err << "phlab: " << r.result["message"].get<std::string>() << "\n";
  return r.exit_code;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Partially hyperbolic dynamics laboratory"};
  app.require_subcommand(1);
  Globals g;
  auto add_globals = [&g](CLI::App* a) {
    a->add_option("--config", g.config, "JSON experiment config");
    a->add_option("--seed", g.seed, "Master seed (overrides the config)");
    a->add_option("--workers", g.workers, "Worker threads (overrides the config)")->check(CLI::Range(1, 1024));
    a->add_option("--out", g.out, "Output directory for JSON and CSV files");
    a->add_option("-p,--param", g.params, "Experiment parameter override key=value");
  };
  add_globals(&app);

  std::string chosen;
  auto leaf = [&](CLI::App* parent, const std::string& name, const std::string& op, const std::string& help) {
    CLI::App* sub = parent->add_subcommand(name, help);
    add_globals(sub);
    sub->callback([&chosen, op] { chosen = op; });
    return sub;
  };
  auto group = [&](const std::string& name, const std::string& help) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->require_subcommand(1);
    add_globals(sub);
    return sub;
  };

  CLI::App* model = group("model", "Model checks");
  leaf(model, "validate", "model-validate", "Validate the configured model");
  leaf(&app, "spectrum", "spectrum", "Lyapunov spectrum by QR");
  CLI::App* semi = group("semiconj", "Semiconjugacy to the linear part");
  leaf(semi, "residual", "semiconj-residual", "Conjugacy residual on random points");
  leaf(semi, "fiber", "semiconj-fiber", "Fiber diameters along center leaves");
  CLI::App* leafg = group("leaf", "Leaf geometry");
  leaf(leafg, "trace", "leaf-trace", "Trace a center or strong-unstable leaf");
  leaf(&app, "growth", "growth", "Exponential growth rate of a leaf segment");
  leaf(&app, "disint", "disint", "Binned disintegration and atomicity");
  leaf(&app, "entropy", "entropy", "Partial entropy along a foliation");
  leaf(&app, "ineq-check", "ineq-check", "Entropy-difference inequality");
  leaf(&app, "pliss", "pliss", "Pliss times of a series or center orbit");
  CLI::App* kan = group("kan", "Kan skew product on the cylinder");
  for (auto [name, help] : std::vector<std::pair<std::string, std::string>>{
           {"validate", "Check the family conditions"},
           {"basins", "Basin classification grid"},
           {"measure", "Boundary invariant measure"},
           {"holonomy", "Center holonomy between the boundaries"},
           {"singularity", "Exponent-transport statistic"}}) {
    CLI::App* sub = leaf(kan, name, "kan-" + name, help);
    sub->add_option("--a", g.kan_a, "Fiber amplitude a");
    sub->add_option("--s", g.kan_s, "Base perturbation s");
  }
  CLI::App* run = app.add_subcommand("run", "Run the operation named in the config");
  add_globals(run);
  run->add_option("--a", g.kan_a, "Fiber amplitude a (Kan configs)");
  run->add_option("--s", g.kan_s, "Base perturbation s (Kan configs)");
  run->callback([&chosen] { chosen = "run"; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // Help requests exit 0 and print the help of the subcommand that asked.
    return app.exit(e, out, err) == 0 ? kOk : kConfigError;
  }

  try {
    if (chosen == "run") {
      if (g.config.empty()) throw ConfigError("run needs --config");
      const ExperimentConfig cfg = load_config(g.config);
      if (!cfg.experiment.contains("operation") || !cfg.experiment["operation"].is_string())
        throw ConfigError("experiment.operation is required for run");
      chosen = cfg.experiment["operation"].get<std::string>();
    }
    return execute(chosen, g, out, err);
  } catch (const ConfigError& e) {
    err << "phlab: config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const Error& e) {
    err << "phlab: " << e.what() << "\n";
    if (e.code() == ErrorCode::InvalidArgument) return kConfigError;
    return is_model_error(e.code()) ? kModelError : kRuntimeError;
  } catch (const std::exception& e) {
    err << "phlab: " << e.what() << "\n";
    return kRuntimeError;
  }
}

}  // namespace phlab::cli
