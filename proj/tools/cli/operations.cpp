#include "cli/operations.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <numeric>

#include "phlab/disintegration.hpp"
#include "phlab/ergodic_stats.hpp"
#include "phlab/error.hpp"
#include "phlab/kan.hpp"
#include "phlab/parallel.hpp"
#include "phlab/random.hpp"
#include "phlab/semiconjugacy.hpp"

namespace phlab::cli {

namespace {

// Seed streams owned by the runner; the library uses 0-6.
constexpr std::uint64_t kPointStream = 16;

json vec_json(const Vec3& v) { return json::array({v.x, v.y, v.z}); }

std::vector<TorusPoint> random_points(std::uint64_t seed, std::size_t n) {
  Rng rng(derive_seed(seed, kPointStream, 0));
  std::vector<TorusPoint> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = rng.uniform(), y = rng.uniform(), z = rng.uniform();
    out.emplace_back(x, y, z);
  }
  return out;
}

Table matrix_table(const std::string& name, int g, const std::function<std::string(int, int)>& cell) {
  Table t{name, {"j"}, {}};
  for (int i = 0; i < g; ++i) t.header.push_back("i" + std::to_string(i));
  for (int j = 0; j < g; ++j) {
    std::vector<std::string> row{fmt(j)};
    for (int i = 0; i < g; ++i) row.push_back(cell(i, j));
    t.add(std::move(row));
  }
  return t;
}

json exponents_json(const ExponentReport& r) {
  return {{"exponents", json::array({r.exponents[0], r.exponents[1], r.exponents[2]})},
          {"sum", r.sum()},
          {"half_width", r.half_width},
          {"log_jacobian", r.log_jacobian},
          {"length", r.length}};
}

// ---- torus models ---------------------------------------------------------

Report model_validate(const ExperimentConfig& cfg, Params& ex) {
  Report r;
  if (model_kind(cfg.model) == "kan") {
    Params mp(cfg.model, "model");
    mp.text("kind", "kan");
    const KanMap m(mp.number("a", 0.25), mp.number("s", 0.0));
    mp.finish();
    const KanValidation v = kan_check(m);
    r.result = {{"kind", "kan"},
                {"passed", v.passed},
                {"boundary_defect", v.boundary_defect},
                {"derivative_sup", v.derivative_sup},
                {"log_integral", json::array({v.log_integral[0], v.log_integral[1]})},
                {"log_integral_exact", v.log_integral_exact},
                {"quadrature_error", v.quadrature_error},
                {"fixed_point_multiplier", v.fixed_point_multiplier},
                {"order_margin", v.order_margin},
                {"base_expansion", v.base_expansion}};
    if (!v.passed) {
      r.result["failed_condition"] = v.failed_condition;
      r.result["message"] = "condition (" + std::to_string(v.failed_condition) + "): " + v.message;
      r.exit_code = 3;
    }
    return r;
  }
  const DAMap f = build_torus_model(cfg.model);
  const auto& sp = f.base().splitting();
  const auto cones_v = ex.vec3("cones", {reference_da_cones().stable, reference_da_cones().center,
                                         reference_da_cones().unstable});
  const int grid = static_cast<int>(ex.integer("grid", 8, 1, 128));
  const VerificationReport v = verify_cones(f, ConeField{cones_v.x, cones_v.y, cones_v.z}, grid);
  json failures = json::array();
  for (const auto& s : v.failures) failures.push_back(s);
  r.result = {{"kind", f.is_linear() ? "linear" : "da"},
              {"eigenvalues", json::array({sp.eigenvalues[0], sp.eigenvalues[1], sp.eigenvalues[2]})},
              {"log_eigenvalues", json::array({std::log(sp.eigenvalues[0]), std::log(sp.eigenvalues[1]),
                                               std::log(sp.eigenvalues[2])})},
              {"diffeomorphism_bound", f.diffeomorphism_bound()},
              {"passed", v.passed},
              {"grid_points", v.points},
              {"unstable_margin", v.unstable_margin},
              {"stable_margin", v.stable_margin},
              {"center_unstable_margin", v.center_unstable_margin},
              {"center_stable_margin", v.center_stable_margin},
              {"stable_center_ratio", v.stable_center_ratio},
              {"center_unstable_ratio", v.center_unstable_ratio},
              {"domination_iterate", v.domination_iterate},
              {"min_jacobian", v.min_jacobian},
              {"max_jacobian", v.max_jacobian},
              {"failures", failures}};
  if (!v.passed) {
    r.result["message"] = "cone verification failed";
    r.exit_code = 3;
  }
  return r;
}

Report spectrum(const ExperimentConfig& cfg, Params& ex) {
  const DAMap f = build_torus_model(cfg.model);
  const std::size_t n = ex.count("length", 100000, 1000);
  const std::size_t starts = ex.count("starts", 1);
  const auto reps = lyapunov_batch(f, starts, n, cfg.seed, cfg.workers);
  Report r;
  Table t{"exponents",
          {"start", "x", "y", "z", "lambda_uu", "lambda_c", "lambda_ss", "sum", "half_width", "log_jacobian"},
          {}};
  std::array<double, 3> mean{};
  double hw = 0.0;
  json runs = json::array();
  for (std::size_t k = 0; k < reps.size(); ++k) {
    const auto& e = reps[k];
    t.add({fmt(k), fmt(e.start.x()), fmt(e.start.y()), fmt(e.start.z()), fmt(e.exponents[0]),
           fmt(e.exponents[1]), fmt(e.exponents[2]), fmt(e.sum()), fmt(e.half_width), fmt(e.log_jacobian)});
    for (int i = 0; i < 3; ++i) mean[i] += e.exponents[i] / static_cast<double>(reps.size());
    hw = std::max(hw, e.half_width);
    runs.push_back(exponents_json(e));
  }
  r.tables.push_back(std::move(t));
  r.result = {{"length", n},
              {"starts", starts},
              {"mean_exponents", json::array({mean[0], mean[1], mean[2]})},
              {"mean_sum", mean[0] + mean[1] + mean[2]},
              {"max_half_width", hw},
              {"runs", runs}};
  if (f.is_linear()) {
    const auto& l = f.base().splitting().eigenvalues;
    r.result["exact_exponents"] = json::array({std::log(l[2]), std::log(l[1]), std::log(l[0])});
  }
  return r;
}

Conjugator read_conjugator(const DAMap& f, Params& ex) {
  if (ex.has("depth")) return Conjugator(f, static_cast<int>(ex.integer("depth", 1, 1, 2000)));
  return Conjugator::with_tolerance(f, ex.positive("tolerance", 1e-8));
}

Report semiconj_residual(const ExperimentConfig& cfg, Params& ex) {
  const DAMap f = build_torus_model(cfg.model);
  const Conjugator c = read_conjugator(f, ex);
  const std::size_t n = ex.count("points", 10000);
  const auto pts = random_points(cfg.seed, n);
  std::vector<double> res(n), corr(n);
  parallel_for(n, cfg.workers, [&](std::size_t i) {
    res[i] = c.residual(pts[i]);
    corr[i] = norm(c.correction(pts[i]));
  });
  Report r;
  Table t{"residuals", {"x", "y", "z", "residual", "correction"}, {}};
  for (std::size_t i = 0; i < n; ++i)
    t.add({fmt(pts[i].x()), fmt(pts[i].y()), fmt(pts[i].z()), fmt(res[i]), fmt(corr[i])});
  r.tables.push_back(std::move(t));
  const auto& tb = c.tail_bounds();
  r.result = {{"depth", c.depth()},
              {"tail_bounds", json::array({tb[0], tb[1], tb[2]})},
              {"total_tail", c.total_tail()},
              {"analytic_bound", c.analytic_bound()},
              {"points", n},
              {"max_residual", *std::max_element(res.begin(), res.end())},
              {"mean_residual", std::accumulate(res.begin(), res.end(), 0.0) / static_cast<double>(n)},
              {"max_correction", *std::max_element(corr.begin(), corr.end())}};
  return r;
}

Report semiconj_fiber(const ExperimentConfig& cfg, Params& ex) {
  const DAMap f = build_torus_model(cfg.model);
  const Conjugator c = read_conjugator(f, ex);
  const std::size_t n = ex.count("points", 16);
  const double half = ex.positive("half_length", 1.0);
  const double step = ex.positive("step", 0.01);
  const double delta = ex.number("delta", 10.0 * c.total_tail());
  if (delta < 0.0) ex.fail("delta", "must be non-negative");
  const auto zs = random_points(cfg.seed, n);
  struct Row {
    FiberReport fib;
    std::string status = "ok";
  };
  std::vector<Row> rows(n);
  parallel_for(n, cfg.workers, [&](std::size_t i) {
    try {
      const TorusPoint x = locate_preimage(c, zs[i]);
      const LeafSegment leaf = trace_leaf(f, lift(x), Foliation::Center, half, step);
      rows[i].fib = fiber_diameter(c, zs[i], leaf, delta);
    } catch (const Error& e) {
      rows[i].status = std::string(to_string(e.code()));
    }
  });
  Report r;
  Table t{"fibers", {"z_x", "z_y", "z_z", "diameter", "run_points", "closest", "status"}, {}};
  double worst = 0.0;
  std::size_t ok = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const Row& w = rows[i];
    t.add({fmt(zs[i].x()), fmt(zs[i].y()), fmt(zs[i].z()), fmt(w.fib.diameter), fmt(w.fib.run_points),
           fmt(w.fib.closest), w.status});
    if (w.status == "ok") {
      ++ok;
      worst = std::max(worst, w.fib.diameter);
    } else {
      r.warn("points[" + std::to_string(i) + "], half_length " + fmt(half), w.status);
    }
  }
  r.tables.push_back(std::move(t));
  r.result = {{"depth", c.depth()}, {"total_tail", c.total_tail()}, {"delta", delta},
              {"points", n},        {"measured", ok},                 {"max_diameter", worst}};
  return r;
}

Foliation read_curve_foliation(Params& ex) {
  const std::string name = ex.text("foliation", "c");
  if (name == "c") return Foliation::Center;
  if (name == "uu") return Foliation::StrongUnstable;
  ex.fail("foliation", "curves need c or uu");
}

Report leaf_trace(const ExperimentConfig& cfg, Params& ex) {
  const DAMap f = build_torus_model(cfg.model);
  const Foliation fol = read_curve_foliation(ex);
  const Vec3 p = ex.vec3("point", {0.1, 0.2, 0.3});
  const double half = ex.positive("half_length", 0.5);
  const double step = ex.positive("step", 0.01);
  const LeafSegment leaf = trace_leaf(f, LiftPoint{p}, fol, half, step);
  Report r;
  Table t{"leaf", {"index", "offset", "x", "y", "z"}, {}};
  for (std::size_t i = 0; i < leaf.points.size(); ++i) {
    const Vec3& q = leaf.points[i].r;
    t.add({fmt(i), fmt(leaf.offset(i)), fmt(q.x), fmt(q.y), fmt(q.z)});
  }
  r.tables.push_back(std::move(t));
  r.result = {{"foliation", to_string(fol)},
              {"vertices", leaf.points.size()},
              {"anchor", leaf.anchor},
              {"length", leaf.length()},
              {"start", vec_json(leaf.points.front().r)},
              {"end", vec_json(leaf.points.back().r)}};
  return r;
}

Report growth(const ExperimentConfig& cfg, Params& ex) {
  const DAMap f = build_torus_model(cfg.model);
  const Foliation fol = read_curve_foliation(ex);
  const bool uu = fol == Foliation::StrongUnstable;
  const Vec3 p = ex.vec3("point", {0.45, 0.52, 0.5});
  const double half = ex.positive("half_length", uu ? 5e-10 : 5e-3);
  const double step = ex.positive("step", uu ? 1e-10 : 1e-3);
  const int n_max = static_cast<int>(ex.integer("n_max", 25, 1, 200));
  CurveOptions opt;
  opt.chord_max = ex.positive("chord_max", opt.chord_max);
  opt.point_budget = ex.count("point_budget", opt.point_budget);
  const GrowthReport g = growth_rate(f, trace_leaf(f, LiftPoint{p}, fol, half, step), n_max, opt);
  const auto& l = f.base().splitting().eigenvalues;
  const double bound = std::log(uu ? l[2] : l[1]);
  Report r;
  Table t{"lengths", {"n", "length", "log_length"}, {}};
  for (std::size_t n = 0; n < g.lengths.size(); ++n)
    t.add({fmt(n), fmt(g.lengths[n]), fmt(std::log(g.lengths[n]))});
  r.tables.push_back(std::move(t));
  r.result = {{"foliation", to_string(fol)},   {"rate", g.rate},
              {"linear_bound", bound},          {"excess", g.rate - bound},
              {"final_points", g.final_points}, {"n_max", n_max}};
  return r;
}

// ---- disintegration and entropy -------------------------------------------

struct ProfileSetup {
  FoliationBox box;
  SamplerSpec sampler;
  BinSpec bins;
};

/// Reads box, sampler and bins blocks. Curve boxes default to 1024 leaf bins,
/// u boxes to 64 per axis.
ProfileSetup read_profile_setup(const DAMap& f, Params& p, const ExperimentConfig& cfg,
                                int transversal_bins, Foliation default_foliation) {
  const BoxSpec spec = read_box(p.block("box"), cfg.workers, default_foliation);
  BinSpec defaults;
  defaults.transversal = transversal_bins;
  defaults.leaf = spec.foliation == Foliation::Unstable ? 64 : 1024;
  return {build_box(f, spec), read_sampler(p.block("sampler"), cfg.seed, cfg.workers),
          read_bins(p.block("bins"), defaults)};
}

json box_json(const FoliationBox& b) {
  return {{"foliation", to_string(b.foliation())},
          {"center", vec_json(b.center().r)},
          {"radius", b.radius()},
          {"half_length", b.half_length()},
          {"max_deformation", b.max_deformation()}};
}

Report disint(const ExperimentConfig& cfg, Params& ex) {
  const DAMap f = build_torus_model(cfg.model);
  const ProfileSetup s = read_profile_setup(f, ex, cfg, 32, Foliation::Center);
  const ConditionalProfile prof = disintegrate(f, s.box, s.sampler, s.bins);
  Report r;
  r.result = {{"box", box_json(s.box)},
              {"sampler", to_string(s.sampler.kind)},
              {"samples", prof.total()},
              {"transversal_cells", prof.transversal_cells()},
              {"leaf_cells", prof.leaf_cells()},
              {"rokhlin_identity_holds", prof.rokhlin_identity_holds()},
              {"max_row_sum_error", prof.max_row_sum_error()}};
  try {
    const AtomicityDiagnostics d = atomicity(prof);
    r.result["atomicity"] = {{"verdict", to_string(d.verdict)},
                             {"plaques", d.plaques.size()},
                             {"median_top1", d.median_top1},
                             {"median_top4", d.median_top4},
                             {"median_top16", d.median_top16},
                             {"median_entropy", d.median_entropy}};
    const std::size_t below = static_cast<std::size_t>(prof.transversal_cells()) - d.plaques.size();
    if (below > 0)
      r.warn("bins.floor = " + fmt(s.bins.floor), fmt(below) + " plaque cells below the sample floor");
  } catch (const Error& e) {
    if (e.code() != ErrorCode::InsufficientSamples) throw;
    r.result["atomicity"] = {{"verdict", to_string(AtomicityVerdict::Indeterminate)}, {"plaques", 0}};
    r.warn("bins.floor = " + fmt(s.bins.floor), e.what());
  }
  Table t{"profile", {"cell", "leaf", "joint", "marginal", "conditional"}, {}};
  for (int c = 0; c < prof.transversal_cells(); ++c)
    for (int l = 0; l < prof.leaf_cells(); ++l)
      if (prof.joint(c, l) > 0)
        t.add({fmt(c), fmt(l), fmt(static_cast<std::size_t>(prof.joint(c, l))),
               fmt(static_cast<std::size_t>(prof.marginal(c))), fmt(prof.conditional(c, l))});
  r.tables.push_back(std::move(t));
  return r;
}

EntropyOptions read_entropy_options(Params& ex, int workers) {
  EntropyOptions o;
  o.epsilons = ex.numbers("epsilons", o.epsilons);
  for (double e : o.epsilons)
    if (!(e > 0.0)) ex.fail("epsilons", "must be positive");
  o.n_max = static_cast<int>(ex.integer("n_max", o.n_max, 1, 200));
  o.min_points = static_cast<int>(ex.integer("min_points", o.min_points, 2, 200));
  o.max_fit_residual = ex.positive("max_fit_residual", o.max_fit_residual);
  o.ball.min_points = ex.count("ball_min_points", o.ball.min_points);
  o.workers = workers;
  return o;
}

json entropy_json(const EntropyEstimate& e) {
  json per = json::array();
  for (const auto& s : e.per_epsilon)
    per.push_back({{"epsilon", s.epsilon},
                   {"slope", s.slope},
                   {"half_width", s.half_width},
                   {"base_points", s.base_points},
                   {"fit_residual", s.fit_residual}});
  return {{"foliation", to_string(e.foliation)},
          {"h", e.h},
          {"half_width", e.half_width},
          {"trend", e.trend},
          {"valid", e.valid},
          {"note", e.note},
          {"samples", e.samples},
          {"per_epsilon", per}};
}

void entropy_rows(Table& t, const std::string& label, const EntropyEstimate& e) {
  for (const auto& s : e.per_epsilon)
    for (std::size_t n = 0; n < s.mean_neg_log_mass.size(); ++n)
      t.add({label, fmt(s.epsilon), fmt(n), fmt(s.mean_neg_log_mass[n]), fmt(s.usable[n])});
}

void floor_warnings(Report& r, const std::string& label, const EntropyEstimate& e,
                    std::size_t bases) {
  for (const auto& s : e.per_epsilon) {
    std::size_t lo = 0, hi = 0, lost = 0;
    for (std::size_t n = 1; n < s.usable.size(); ++n)
      if (s.usable[n] < bases) {
        if (!lo) lo = n;
        hi = n;
        lost = std::max(lost, bases - s.usable[n]);
      }
    if (lo)
      r.warn(label + "epsilon " + fmt(s.epsilon) + ", n in [" + fmt(lo) + ", " + fmt(hi) + "]",
             "up to " + fmt(lost) + " of " + fmt(bases) +
                 " base points clipped at the plaque edge or below the resolution floor");
  }
}

std::pair<EntropyEstimate, std::size_t> run_entropy(const DAMap& f, Params& p,
                                                    const ExperimentConfig& cfg,
                                                    const EntropyOptions& opt,
                                                    Foliation default_foliation) {
  const ProfileSetup s = read_profile_setup(f, p, cfg, 4, default_foliation);
  const std::size_t k = p.count("base_points", 64, 2);
  const ConditionalProfile prof = disintegrate(f, s.box, s.sampler, s.bins);
  const auto bases = entropy_base_points(prof, k, derive_seed(cfg.seed, kPointStream, 1));
  return {partial_entropy(f, prof, bases, opt), bases.size()};
}

Report entropy(const ExperimentConfig& cfg, Params& ex) {
  const DAMap f = build_torus_model(cfg.model);
  const EntropyOptions opt = read_entropy_options(ex, cfg.workers);
  const auto [est, k] = run_entropy(f, ex, cfg, opt, Foliation::Center);
  Report r;
  r.result = entropy_json(est);
  if (f.is_linear()) {
    const auto& l = f.base().splitting().eigenvalues;
    const double ref = est.foliation == Foliation::Center         ? std::log(l[1])
                       : est.foliation == Foliation::StrongUnstable ? std::log(l[2])
                                                                   : std::log(l[1] * l[2]);
    r.result["linear_reference"] = ref;
  }
  floor_warnings(r, "", est, k);
  Table t{"slopes", {"foliation", "epsilon", "n", "mean_neg_log_mass", "usable"}, {}};
  entropy_rows(t, to_string(est.foliation), est);
  r.tables.push_back(std::move(t));
  return r;
}

Report ineq_check(const ExperimentConfig& cfg, Params& ex) {
  const DAMap f = build_torus_model(cfg.model);
  const EntropyOptions opt = read_entropy_options(ex, cfg.workers);
  const std::size_t n = ex.count("exponent_length", 100000, 1000);
  const ExponentReport exps = lyapunov_spectrum(f, n, cfg.seed);
  Params up = ex.block("u");
  Params wp = ex.block("wu");
  const auto [u, ku] = run_entropy(f, up, cfg, opt, Foliation::Unstable);
  const auto [wu, kw] = run_entropy(f, wp, cfg, opt, Foliation::Center);
  up.finish();
  wp.finish();
  const InequalityReport ir = entropy_inequality_check(u, wu, exps);
  Report r;
  r.result = {{"tau_uu", ir.tau_uu},
              {"h_u", ir.h_u},
              {"h_wu", ir.h_wu},
              {"margin", ir.margin},
              {"tolerance", ir.tolerance},
              {"verdict", to_string(ir.verdict)},
              {"reason", ir.reason},
              {"exponents", exponents_json(exps)},
              {"u", entropy_json(u)},
              {"wu", entropy_json(wu)}};
  floor_warnings(r, "u: ", u, ku);
  floor_warnings(r, "wu: ", wu, kw);
  Table t{"slopes", {"foliation", "epsilon", "n", "mean_neg_log_mass", "usable"}, {}};
  entropy_rows(t, "u", u);
  entropy_rows(t, "wu", wu);
  r.tables.push_back(std::move(t));
  return r;
}

Report pliss(const ExperimentConfig& cfg, Params& ex) {
  Report r;
  if (ex.has("series")) {
    const auto a = ex.numbers("series", {});
    if (a.empty()) ex.fail("series", "must not be empty");
    const double tau = ex.number("threshold", 0.5);
    const std::size_t horizon = ex.count("horizon", 0, 0);
    const PlissReport p = pliss_blocks(a, tau, horizon);
    Table t{"indices", {"index", "censored"}, {}};
    for (std::size_t k : p.indices) t.add({fmt(k), k >= p.censored_from ? "1" : "0"});
    r.tables.push_back(std::move(t));
    r.result = {{"source", "series"},       {"threshold", tau},
                {"length", a.size()},       {"count", p.indices.size()},
                {"density", p.density},     {"censored_from", p.censored_from},
                {"censored", p.censored_count()}};
    return r;
  }
  const DAMap f = build_torus_model(cfg.model);
  const std::size_t n = ex.count("length", 100000, 10);
  const auto eps = ex.numbers("epsilons", {0.05, 0.1, 0.2, 0.4});
  const Vec3 start = ex.vec3("start", {0.1234, 0.5678, 0.9012});
  std::vector<PlissSetReport> reps(eps.size());
  parallel_for(eps.size(), cfg.workers, [&](std::size_t i) {
    reps[i] = pliss_set_fraction(f, TorusPoint(start), n, eps[i]);
  });
  Table t{"fractions", {"epsilon", "density", "uncensored_density"}, {}};
  for (const auto& p : reps) t.add({fmt(p.epsilon), fmt(p.density), fmt(p.uncensored_density)});
  r.tables.push_back(std::move(t));
  r.result = {{"source", "orbit"},
              {"length", n},
              {"center_exponent", reps.empty() ? 0.0 : reps.front().center_exponent},
              {"epsilons", eps}};
  return r;
}

// ---- Kan cylinder ----------------------------------------------------------

json kan_model_json(const KanMap& m) { return {{"a", m.amplitude()}, {"s", m.perturbation()}}; }

Report kan_validate_op(const ExperimentConfig& cfg, Params& ex) {
  json model = cfg.model;
  if (!model.contains("kind")) model["kind"] = "kan";
  ExperimentConfig c = cfg;
  c.model = model;
  return model_validate(c, ex);
}

Report kan_basins(const ExperimentConfig& cfg, Params& ex) {
  const KanMap m = build_kan_model(cfg.model);
  BasinOptions o;
  o.grid = static_cast<int>(ex.integer("grid", o.grid, 2, 4096));
  if (o.grid % 2) ex.fail("grid", "must be even");
  o.samples_per_cell = static_cast<int>(ex.integer("samples_per_cell", o.samples_per_cell, 1, 1 << 20));
  o.horizon = ex.count("horizon", o.horizon, 0);
  o.trap = ex.positive("trap", o.trap);
  if (!(o.trap < 0.5)) ex.fail("trap", "must be below 1/2");
  o.seed = cfg.seed;
  o.workers = cfg.workers;
  const BasinReport b = basin_classify(m, o);
  Report r;
  r.result = {{"model", kan_model_json(m)},
              {"grid", b.grid},
              {"samples_per_cell", o.samples_per_cell},
              {"horizon", o.horizon},
              {"trap", o.trap},
              {"both_fraction", b.both_fraction},
              {"unresolved_fraction", b.unresolved_fraction},
              {"trapped_total", b.trapped_total}};
  if (m.perturbation() == 0.0) {
    r.result["symmetry_z"] = b.symmetry_z;
    r.result["symmetry_cell_pass"] = b.symmetry_cell_pass;
  }
  if (b.unresolved_fraction > 0.0)
    r.warn("horizon = " + fmt(o.horizon),
           "unresolved fraction " + fmt(b.unresolved_fraction) + " left unclassified");
  const int g = b.grid;
  r.tables.push_back(matrix_table("bottom", g, [&](int i, int j) { return fmt(b.at(i, j).bottom); }));
  r.tables.push_back(matrix_table("top", g, [&](int i, int j) { return fmt(b.at(i, j).top); }));
  r.tables.push_back(
      matrix_table("unresolved", g, [&](int i, int j) { return fmt(b.at(i, j).unresolved); }));
  return r;
}

Report kan_measure(const ExperimentConfig& cfg, Params& ex) {
  const KanMap m = build_kan_model(cfg.model);
  const int boundary = static_cast<int>(ex.integer("boundary", 1, 0, 1));
  BoundaryMeasureOptions o;
  const std::string method = ex.text("method", "ulam");
  if (method == "ulam") o.method = MeasureMethod::Ulam;
  else if (method == "orbit") o.method = MeasureMethod::Orbit;
  else ex.fail("method", "expected ulam or orbit");
  o.cells = static_cast<int>(ex.integer("cells", o.cells, 1, 1 << 16));
  o.orbit_length = ex.count("orbit_length", o.orbit_length);
  o.burn_in = ex.count("burn_in", o.burn_in, 0);
  o.tolerance = ex.positive("tolerance", o.tolerance);
  o.max_iterations = static_cast<int>(ex.integer("max_iterations", o.max_iterations, 1, 100000000));
  o.seed = cfg.seed;
  const BoundaryMeasure bm = boundary_measure(m, boundary, o);
  Report r;
  r.result = {{"model", kan_model_json(m)},
              {"boundary", boundary},
              {"method", method},
              {"cells", o.cells},
              {"exponent", bm.exponent},
              {"lebesgue_exponent", kan_log_integral(m.amplitude())},
              {"iterations", bm.iterations},
              {"last_change", bm.last_change}};
  Table t{"density", {"cell", "theta", "density"}, {}};
  for (int c = 0; c < o.cells; ++c)
    t.add({fmt(c), fmt((c + 0.5) / o.cells), fmt(bm.density[static_cast<std::size_t>(c)])});
  r.tables.push_back(std::move(t));
  return r;
}

HolonomyMap read_holonomy(const KanMap& m, Params& ex, int workers, int default_nodes) {
  const int nodes = static_cast<int>(ex.integer("nodes", default_nodes, 2, 1 << 22));
  const int depth = static_cast<int>(ex.integer("depth", 25, 2, 60));
  return center_holonomy(m, nodes, depth, workers);
}

Report kan_holonomy(const ExperimentConfig& cfg, Params& ex) {
  const KanMap m = build_kan_model(cfg.model);
  const HolonomyMap h = read_holonomy(m, ex, cfg.workers, 512);
  Report r;
  r.result = {{"model", kan_model_json(m)},
              {"nodes", h.theta.size()},
              {"depth", h.depth},
              {"strictly_monotone", h.strictly_monotone()},
              {"max_conjugacy_residual", h.max_conjugacy_residual()},
              {"max_depth_residual", *std::max_element(h.residual.begin(), h.residual.end())},
              {"contraction", h.contraction},
              {"contraction_bound", h.contraction_bound}};
  Table t{"holonomy", {"theta", "pi", "residual", "conjugacy"}, {}};
  for (std::size_t j = 0; j < h.theta.size(); ++j)
    t.add({fmt(h.theta[j]), fmt(h.image[j]), fmt(h.residual[j]), fmt(h.conjugacy[j])});
  r.tables.push_back(std::move(t));
  return r;
}

Report kan_singularity(const ExperimentConfig& cfg, Params& ex) {
  const KanMap m = build_kan_model(cfg.model);
  const HolonomyMap h = read_holonomy(m, ex, cfg.workers, 1024);
  SingularityOptions o;
  o.samples = ex.count("samples", o.samples);
  o.blocks = static_cast<int>(ex.integer("blocks", o.blocks, 2, 1 << 20));
  o.burn_in = ex.count("burn_in", o.burn_in, 0);
  o.seed = cfg.seed;
  const SingularityReport s = singularity_test(m, h, o);
  auto mat = [](const Mat2& a) { return json::array({json::array({a[0], a[1]}), json::array({a[2], a[3]})}); };
  Report r;
  r.result = {{"model", kan_model_json(m)},
              {"delta", s.delta},
              {"standard_error", s.standard_error},
              {"transported", s.transported},
              {"top_exponent", s.top_exponent},
              {"singular", s.singular},
              {"hypothesis", s.hypothesis},
              {"derivative_p0", mat(s.derivative_p0)},
              {"derivative_p1", mat(s.derivative_p1)},
              {"max_conjugacy_residual", h.max_conjugacy_residual()}};
  return r;
}

using Handler = Report (*)(const ExperimentConfig&, Params&);

const std::map<std::string, Handler>& handlers() {
  static const std::map<std::string, Handler> table{
      {"model-validate", model_validate},
      {"spectrum", spectrum},
      {"semiconj-residual", semiconj_residual},
      {"semiconj-fiber", semiconj_fiber},
      {"leaf-trace", leaf_trace},
      {"growth", growth},
      {"disint", disint},
      {"entropy", entropy},
      {"ineq-check", ineq_check},
      {"pliss", pliss},
      {"kan-validate", kan_validate_op},
      {"kan-basins", kan_basins},
      {"kan-measure", kan_measure},
      {"kan-holonomy", kan_holonomy},
      {"kan-singularity", kan_singularity},
  };
  return table;
}

}  // namespace

const std::vector<std::string>& operation_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v;
    for (const auto& [k, h] : handlers()) v.push_back(k);
    return v;
  }();
  return names;
}

Report run_operation(const std::string& operation, const ExperimentConfig& cfg) {
  const auto it = handlers().find(operation);
  if (it == handlers().end()) throw ConfigError("unknown operation '" + operation + "'");
  Params ex(cfg.experiment, "experiment");
  const std::string named = ex.text("operation", operation);
  if (named != operation)
    ex.fail("operation", "config is for '" + named + "', not '" + operation + "'");
  Report r = it->second(cfg, ex);
  ex.finish();
  r.operation = operation;
  for (auto& w : r.warnings) w.operation = operation;
  return r;
}

}  // namespace phlab::cli
