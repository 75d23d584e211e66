#include "cli/config.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "phlab/error.hpp"

namespace phlab::cli {

Params::Params(json object, std::string path) : obj_(std::move(object)), path_(std::move(path)) {
  if (obj_.is_null()) obj_ = json::object();
  if (!obj_.is_object()) throw ConfigError((path_.empty() ? "config" : path_) + ": expected an object");
}

void Params::fail(const std::string& key, const std::string& why) const {
  throw ConfigError((path_.empty() ? key : path_ + "." + key) + ": " + why);
}

const json* Params::find(const std::string& key) {
  used_.insert(key);
  const auto it = obj_.find(key);
  return it == obj_.end() ? nullptr : &*it;
}

double Params::number(const std::string& key, double fallback) {
  const json* v = find(key);
  if (!v) return fallback;
  if (!v->is_number()) fail(key, "expected a number");
  const double x = v->get<double>();
  if (!std::isfinite(x)) fail(key, "must be finite");
  return x;
}

std::int64_t Params::integer(const std::string& key, std::int64_t fallback) {
  return integer(key, fallback, std::numeric_limits<std::int64_t>::min(),
                 std::numeric_limits<std::int64_t>::max());
}

std::int64_t Params::integer(const std::string& key, std::int64_t fallback, std::int64_t lo,
                             std::int64_t hi) {
  const json* v = find(key);
  std::int64_t x = fallback;
  if (v) {
    if (v->is_number_integer()) {
      x = v->get<std::int64_t>();
    } else if (v->is_number_float() && std::floor(v->get<double>()) == v->get<double>() &&
               std::abs(v->get<double>()) < 9e15) {
      x = static_cast<std::int64_t>(v->get<double>());  // 1e6 style literals
    } else {
      fail(key, "expected an integer");
    }
  }
  if (x < lo || x > hi)
    fail(key, "must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  return x;
}

std::size_t Params::count(const std::string& key, std::size_t fallback, std::size_t lo) {
  return static_cast<std::size_t>(integer(key, static_cast<std::int64_t>(fallback),
                                          static_cast<std::int64_t>(lo),
                                          std::numeric_limits<std::int64_t>::max()));
}

double Params::positive(const std::string& key, double fallback) {
  const double x = number(key, fallback);
  if (!(x > 0.0)) fail(key, "must be positive");
  return x;
}

std::string Params::text(const std::string& key, const std::string& fallback) {
  const json* v = find(key);
  if (!v) return fallback;
  if (!v->is_string()) fail(key, "expected a string");
  return v->get<std::string>();
}

bool Params::flag(const std::string& key, bool fallback) {
  const json* v = find(key);
  if (!v) return fallback;
  if (!v->is_boolean()) fail(key, "expected true or false");
  return v->get<bool>();
}

std::vector<double> Params::numbers(const std::string& key, const std::vector<double>& fallback) {
  const json* v = find(key);
  if (!v) return fallback;
  if (!v->is_array()) fail(key, "expected an array of numbers");
  std::vector<double> out;
  for (const auto& e : *v) {
    if (!e.is_number() || !std::isfinite(e.get<double>())) fail(key, "expected finite numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

Vec3 Params::vec3(const std::string& key, const Vec3& fallback) {
  const json* v = find(key);
  if (!v) return fallback;
  const auto xs = numbers(key, {});
  if (xs.size() != 3) fail(key, "expected three numbers");
  return {xs[0], xs[1], xs[2]};
}

Params Params::block(const std::string& key) {
  const json* v = find(key);
  return Params(v ? *v : json::object(), path_.empty() ? key : path_ + "." + key);
}

void Params::finish() const {
  for (const auto& [key, value] : obj_.items())
    if (!used_.count(key)) fail(key, "unknown key");
}

ExperimentConfig parse_config(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  Params top(doc, "");
  ExperimentConfig cfg;
  const std::string schema = top.text("schema", kConfigSchema);
  if (schema != kConfigSchema) top.fail("schema", "unsupported version '" + schema + "'");
  cfg.model = top.block("model").raw();
  cfg.experiment = top.block("experiment").raw();
  Params exec = top.block("execution");
  cfg.seed = static_cast<std::uint64_t>(exec.integer("seed", 0, 0, std::numeric_limits<std::int64_t>::max()));
  cfg.workers = static_cast<int>(exec.integer("workers", 1, 1, 1024));
  cfg.out = exec.text("out", "");
  exec.finish();
  top.finish();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string model_kind(const json& model) {
  Params p(model, "model");
  const std::string kind = p.text("kind", "linear");
  if (kind != "linear" && kind != "da" && kind != "kan")
    p.fail("kind", "expected linear, da or kan");
  return kind;
}

namespace {

IntMat3 read_matrix(Params& p) {
  if (!p.has("matrix")) return reference_automorphism().matrix();
  const auto xs = p.numbers("matrix", {});
  if (xs.size() != 9) p.fail("matrix", "expected nine integers in row-major order");
  IntMat3 m{};
  for (int i = 0; i < 9; ++i) {
    if (std::floor(xs[i]) != xs[i]) p.fail("matrix", "entries must be integers");
    m[i] = static_cast<std::int64_t>(xs[i]);
  }
  return m;
}

}  // namespace

DAMap build_torus_model(const json& model) {
  Params p(model, "model");
  const std::string kind = p.text("kind", "linear");
  if (kind == "kan") p.fail("kind", "this operation needs a linear or da model");
  if (kind != "linear" && kind != "da") p.fail("kind", "expected linear, da or kan");
  IntegerAutomorphism a(read_matrix(p));
  if (kind == "linear") {
    p.finish();
    return DAMap::linear(std::move(a));
  }
  BumpParameters bump;
  bump.amplitude = p.number("amplitude", 0.05);
  const Vec3 q = p.vec3("center", {0.5, 0.5, 0.5});
  bump.center = TorusPoint(q);
  bump.radius = p.positive("radius", 0.2);
  // The default pushes along the center eigendirection of A.
  const std::string dir = p.has("direction") && p.raw()["direction"].is_string()
                              ? p.text("direction", "center")
                              : "";
  if (dir.empty()) {
    bump.direction = p.vec3("direction", a.splitting().eigenvectors[1]);
  } else if (dir == "stable" || dir == "center" || dir == "unstable") {
    bump.direction = a.splitting().eigenvectors[dir == "stable" ? 0 : dir == "center" ? 1 : 2];
  } else {
    p.fail("direction", "expected three numbers or stable, center, unstable");
  }
  p.finish();
  return DAMap(std::move(a), bump);
}

KanMap build_kan_model(const json& model) {
  Params p(model, "model");
  if (p.text("kind", "kan") != "kan") p.fail("kind", "this operation needs a kan model");
  const KanMap m(p.number("a", 0.25), p.number("s", 0.0));
  p.finish();
  kan_validate(m);
  return m;
}

BoxSpec read_box(Params p, int workers, Foliation default_foliation) {
  BoxSpec b;
  b.foliation = default_foliation;
  const std::string fol = p.text("foliation", to_string(default_foliation));
  try {
    b.foliation = parse_foliation(fol);
  } catch (const Error&) {
    p.fail("foliation", "expected c, uu or u");
  }
  const bool u = b.foliation == Foliation::Unstable;
  b.center = LiftPoint{p.vec3("center", {0.5, 0.5, 0.5})};
  b.radius = p.positive("radius", 0.02);
  b.half_length = p.positive("half_length", u ? 0.25 : 0.5);
  b.transversal_nodes = static_cast<int>(p.integer("transversal_nodes", 9, 3, 1001));
  b.leaf_nodes = static_cast<int>(p.integer("leaf_nodes", u ? 17 : 65, 3, 4001));
  if (b.transversal_nodes % 2 == 0) p.fail("transversal_nodes", "must be odd");
  if (b.leaf_nodes % 2 == 0) p.fail("leaf_nodes", "must be odd");
  b.max_turn = p.positive("max_turn", b.max_turn);
  b.workers = workers;
  p.finish();
  return b;
}

SamplerSpec read_sampler(Params p, std::uint64_t seed, int workers) {
  SamplerSpec s;
  const std::string kind = p.text("kind", "volume");
  try {
    s.kind = parse_sampler(kind);
  } catch (const Error&) {
    p.fail("kind", "expected volume, orbit or delta");
  }
  s.samples = p.count("samples", s.samples);
  s.seed = seed;
  s.orbit_start = TorusPoint(p.vec3("orbit_start", s.orbit_start.coords()));
  s.burn_in = p.count("burn_in", s.burn_in, 0);
  s.orbit_budget = p.count("orbit_budget", 0, 0);
  s.delta_point = TorusPoint(p.vec3("delta_point", s.delta_point.coords()));
  if (s.kind == SamplerKind::Delta && !p.has("delta_point"))
    p.fail("delta_point", "required by the delta sampler");
  s.workers = workers;
  p.finish();
  return s;
}

BinSpec read_bins(Params p, BinSpec b) {
  b.transversal = static_cast<int>(p.integer("transversal", b.transversal, 1, 4096));
  b.leaf = static_cast<int>(p.integer("leaf", b.leaf, 1, 1 << 16));
  b.floor = p.count("floor", b.floor);
  p.finish();
  return b;
}

}  // namespace phlab::cli
