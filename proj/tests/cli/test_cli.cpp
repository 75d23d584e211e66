#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cli/app.hpp"
#include "doctest.h"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
  json doc() const { return json::parse(out); }
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "phlab");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = phlab::cli::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string config_path(const std::string& name) { return std::string(PHLAB_SOURCE_DIR) + "/configs/" + name; }

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("phlab_cli_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string write_config(const std::string& name, const std::string& text) {
  const fs::path p = scratch(name + ".json");
  std::ofstream(p) << text;
  return p.string();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("spectrum of the linear model matches the eigenvalue logs") {
  const fs::path dir = scratch("spectrum");
  const Run r = run({"spectrum", "--config", config_path("spectrum_linear.json"), "--out", dir.string()});
  REQUIRE(r.code == 0);
  const json d = r.doc();
  const auto e = d["result"]["mean_exponents"];
  CHECK(std::abs(e[0].get<double>() - 1.17777) <= 1e-3);
  CHECK(std::abs(e[1].get<double>() - 0.44147) <= 1e-3);
  CHECK(std::abs(e[2].get<double>() + 1.61924) <= 1e-3);
  const std::string csv = slurp(dir / "spectrum_exponents.csv");
  CHECK(csv.rfind("start,x,y,z,lambda_uu,lambda_c,lambda_ss,sum,half_width,log_jacobian\n", 0) == 0);
  CHECK(slurp(dir / "spectrum.json") == r.out);
  CHECK(r.err.find("finished in") != std::string::npos);
}

TEST_CASE("reruns are byte-identical across worker counts") {
  const std::vector<std::vector<std::string>> cases{
      {"semiconj", "residual", "--config", config_path("semiconj_residual.json"), "-p", "points=400"},
      {"kan", "basins", "--a", "0.25", "-p", "grid=8", "-p", "horizon=5000"},
      {"kan", "holonomy", "--a", "0.25", "--s", "0.1", "-p", "nodes=64"},
      {"disint", "-p", "sampler.samples=60000", "-p", "bins.transversal=8"},
      {"disint", "--config", config_path("disint_linear_c.json"), "-p", "sampler.kind=orbit",
       "-p", "sampler.samples=20000", "-p", "box.radius=0.05"},
      {"entropy", "-p", "sampler.samples=100000", "-p", "base_points=6", "-p", "epsilons=[0.1,0.05]"},
      {"pliss", "--config", config_path("pliss_da.json"), "-p", "length=5000"},
  };
  for (const auto& args : cases) {
    const std::string label = args[0] + (args.size() > 1 ? " " + args[1] : "");
    CAPTURE(label);
    std::vector<std::string> outputs;
    std::vector<std::string> csvs;
    for (const char* workers : {"1", "1", "3"}) {
      auto a = args;
      const fs::path dir = scratch("det");
      a.insert(a.end(), {"--workers", workers, "--out", dir.string(), "--seed", "11"});
      const Run r = run(a);
      REQUIRE(r.code == 0);
      outputs.push_back(r.out);
      std::string all;
      for (const auto& t : r.doc()["tables"]) all += slurp(dir / t.get<std::string>());
      csvs.push_back(all);
    }
    CHECK(outputs[0] == outputs[1]);
    CHECK(outputs[0] == outputs[2]);
    CHECK(csvs[0] == csvs[1]);
    CHECK(csvs[0] == csvs[2]);
  }
}

TEST_CASE("seed changes the sampled output") {
  const auto a = run({"semiconj", "residual", "-p", "points=50", "--seed", "1", "--config",
                      config_path("semiconj_residual.json")});
  const auto b = run({"semiconj", "residual", "-p", "points=50", "--seed", "2", "--config",
                      config_path("semiconj_residual.json")});
  REQUIRE(a.code == 0);
  CHECK(a.out != b.out);
}

TEST_CASE("degenerate Kan model exits with the model code and names condition 3") {
  const Run r = run({"run", "--config", config_path("kan_degenerate.json")});
  CHECK(r.code == 3);
  CHECK(r.err.find("condition (3)") != std::string::npos);
  const Run h = run({"kan", "holonomy", "--a", "0"});
  CHECK(h.code == 3);
  CHECK(h.err.find("condition (3)") != std::string::npos);
}

TEST_CASE("configuration errors exit with code 2") {
  CHECK(run({"spectrum", "--config", write_config("badjson", "{ not json")}).code == 2);
  CHECK(run({"spectrum", "--config", "/nonexistent/phlab.json"}).code == 2);
  const Run unknown = run({"spectrum", "-p", "lenght=2000"});
  CHECK(unknown.code == 2);
  CHECK(unknown.err.find("experiment.lenght") != std::string::npos);
  CHECK(run({"spectrum", "-p", "length=10"}).code == 2);
  CHECK(run({"spectrum", "--workers", "0"}).code == 2);
  CHECK(run({"frobnicate"}).code == 2);
  CHECK(run({"kan", "basins", "-p", "grid=7"}).code == 2);
  CHECK(run({"kan", "measure", "-p", "method=monte-carlo"}).code == 2);
  CHECK(run({"entropy", "-p", "box.foliation=ss"}).code == 2);
  const std::string mismatch = write_config(
      "mismatch", R"({"schema":"phlab.config/1","experiment":{"operation":"pliss"}})");
  CHECK(run({"spectrum", "--config", mismatch}).code == 2);
  CHECK(run({"run"}).code == 2);
  const std::string version = write_config("version", R"({"schema":"phlab.config/9"})");
  CHECK(run({"spectrum", "--config", version}).code == 2);
}

TEST_CASE("rejected torus models exit with code 3") {
  const std::string singular = write_config(
      "singular", R"({"model":{"kind":"linear","matrix":[1,0,0,0,1,0,0,0,1]}})");
  CHECK(run({"spectrum", "--config", singular}).code == 3);
  const std::string wild = write_config("wild", R"({"model":{"kind":"da","amplitude":5.0}})");
  CHECK(run({"spectrum", "--config", wild}).code == 3);
}

TEST_CASE("numerical failures exit with code 4") {
  const Run r = run({"growth", "-p", "foliation=uu", "-p", "point_budget=100"});
  CHECK(r.code == 4);
  CHECK(r.err.find("RefinementExplosion") != std::string::npos);
}

TEST_CASE("run dispatches on the configured operation and flags override the config") {
  const Run r = run({"run", "--config", config_path("kan_holonomy.json"), "-p", "nodes=32", "--s", "0.05"});
  REQUIRE(r.code == 0);
  const json d = r.doc();
  CHECK(d["operation"] == "kan-holonomy");
  CHECK(d["result"]["nodes"] == 32);
  CHECK(d["config"]["model"]["s"] == 0.05);
  CHECK(d["result"]["strictly_monotone"] == true);
}

TEST_CASE("warnings name the operation and the parameter range") {
  const Run r = run({"kan", "basins", "--a", "0.25", "-p", "grid=4", "-p", "horizon=0"});
  REQUIRE(r.code == 0);
  const json w = r.doc()["warnings"];
  REQUIRE(w.size() == 1);
  CHECK(w[0]["operation"] == "kan-basins");
  CHECK(w[0]["parameter"] == "horizon = 0");
}
