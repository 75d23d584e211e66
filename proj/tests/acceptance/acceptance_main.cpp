// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "cli/app.hpp"
#include "phlab/disintegration.hpp"
#include "phlab/ergodic_stats.hpp"
#include "phlab/foliation.hpp"
#include "phlab/kan.hpp"
#include "phlab/map_models.hpp"
#include "phlab/random.hpp"
#include "phlab/semiconjugacy.hpp"
#include "phlab/torus.hpp"
#include "support/oracles.hpp"

using namespace phlab;

namespace {

constexpr double kPi = 3.14159265358979323846;
const IntMat3 kRef{1, -1, 0, -1, 2, -1, 0, -1, 2};

int g_failures = 0;
std::vector<bool> g_rokhlin;  // identity check of every profile built below

void report(int id, const char* name, bool pass, const std::string& detail) {
  if (!pass) ++g_failures;
  std::printf("%s %2d %-14s %s\n", pass ? "PASS" : "FAIL", id, name, detail.c_str());
  std::fflush(stdout);
}

std::string format(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

/// Eigenvalues of kRef from the characteristic polynomial, ascending.
std::vector<double> oracle_eigenvalues() { return oracle::real_roots({1, -5, 6, -1}, 0.0, 5.0); }

/// Runs a check and turns an unexpected exception into a FAIL line.
void guarded(int id, const char* name, const std::function<void()>& body) {
  try {
    body();
  } catch (const std::exception& e) {
    report(id, name, false, std::string("threw: ") + e.what());
  }
}

ConditionalProfile profile(const DAMap& f, Foliation fol, double radius, double half_length,
                           int leaf_nodes, SamplerKind kind, std::size_t samples, BinSpec bins,
                           std::uint64_t seed) {
  BoxSpec b;
  b.foliation = fol;
  b.center = LiftPoint{{0.5, 0.5, 0.5}};
  b.radius = radius;
  b.half_length = half_length;
  b.leaf_nodes = leaf_nodes;
  SamplerSpec s;
  s.kind = kind;
  s.samples = samples;
  s.seed = seed;
  ConditionalProfile p = disintegrate(f, build_box(f, b), s, bins);
  g_rokhlin.push_back(p.rokhlin_identity_holds());
  return p;
}

EntropyEstimate entropy_of(const DAMap& f, const ConditionalProfile& p, std::uint64_t seed) {
  const auto bases = entropy_base_points(p, 64, derive_seed(seed, 16, 1));
  return partial_entropy(f, p, bases, EntropyOptions{});
}

BinSpec bins(int transversal, int leaf) {
  BinSpec b;
  b.transversal = transversal;
  b.leaf = leaf;
  return b;
}

// ---- 1 ----------------------------------------------------------------------

void spectrum() {
  const auto roots = oracle_eigenvalues();
  HyperbolicSplitting s = spectral_split(kRef);
  std::vector<double> times;
  for (int i = 0; i < 200; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    s = spectral_split(kRef);
    times.push_back(seconds_since(t0));
  }
  std::nth_element(times.begin(), times.begin() + 100, times.end());
  double err = roots.size() == 3 ? 0.0 : 1.0;
  for (std::size_t i = 0; i < 3 && roots.size() == 3; ++i)
    err = std::max(err, std::abs(s.eigenvalues[i] - roots[i]));
  report(1, "spectrum", err <= 1e-10 && times[100] < 1e-3,
         format("eigenvalues (%.5f, %.5f, %.5f), oracle error %.2e, median runtime %.1f us",
                s.eigenvalues[0], s.eigenvalues[1], s.eigenvalues[2], err, times[100] * 1e6));
}

// ---- 2 ----------------------------------------------------------------------

void lyapunov() {
  const auto roots = oracle_eigenvalues();
  const ExponentReport r = lyapunov_spectrum(DAMap::linear(IntegerAutomorphism(kRef)), 100000, 1);
  const double expect[3] = {std::log(roots[2]), std::log(roots[1]), std::log(roots[0])};
  double err = 0.0;
  for (int i = 0; i < 3; ++i) err = std::max(err, std::abs(r.exponents[i] - expect[i]));
  report(2, "lyapunov", err <= 1e-3 && std::abs(r.sum()) <= 1e-3,
         format("(%.5f, %.5f, %.5f), max error %.2e, sum %.2e", r.exponents[0], r.exponents[1],
                r.exponents[2], err, r.sum()));
}

// ---- 3 ----------------------------------------------------------------------

void semiconjugacy() {
  const auto t0 = std::chrono::steady_clock::now();
  const Conjugator c = Conjugator::with_tolerance(reference_da_map(0.05), 1e-8);
  Rng rng(derive_seed(3, 16, 0));
  double worst = 0.0;
  for (int i = 0; i < 10000; ++i)
    worst = std::max(worst, c.residual(TorusPoint(rng.uniform(), rng.uniform(), rng.uniform())));
  const double secs = seconds_since(t0);
  const Conjugator id(DAMap::linear(reference_automorphism()), c.depth());
  bool identity = true;
  for (int i = 0; i < 1000; ++i) {
    const TorusPoint p(rng.uniform(), rng.uniform(), rng.uniform());
    identity = identity && id.phi(p) == p;
  }
  report(3, "semiconjugacy", worst <= 1e-6 && identity && secs < 30.0,
         format("depth %d, max residual %.2e on 1e4 points, s = 0 identity %s, %.2f s", c.depth(),
                worst, identity ? "exact" : "broken", secs));
}

// ---- 4, 5, 8 ----------------------------------------------------------------

struct LinearEntropies {
  EntropyEstimate c, uu, u;
};

LinearEntropies linear_entropy() {
  const DAMap f = DAMap::linear(IntegerAutomorphism(kRef));
  const auto& l = f.base().splitting().eigenvalues;
  const auto t0 = std::chrono::steady_clock::now();
  LinearEntropies e;
  e.c = entropy_of(f, profile(f, Foliation::Center, 0.02, 0.5, 65, SamplerKind::Volume, 1000000,
                              bins(4, 1024), 1),
                   1);
  e.uu = entropy_of(f, profile(f, Foliation::StrongUnstable, 0.02, 0.5, 65, SamplerKind::Volume,
                               1000000, bins(4, 1024), 1),
                    1);
  const double secs = seconds_since(t0);
  const double rc = e.c.h / std::log(l[1]) - 1.0, ru = e.uu.h / std::log(l[2]) - 1.0;
  report(4, "entropy", e.c.valid && e.uu.valid && std::abs(rc) <= 0.05 && std::abs(ru) <= 0.05 &&
                           secs < 300.0,
         format("h(c) = %.4f (%+.2f%%), h(uu) = %.4f (%+.2f%%), %.1f s", e.c.h, 100 * rc, e.uu.h,
                100 * ru, secs));
  e.u = entropy_of(f, profile(f, Foliation::Unstable, 0.02, 0.25, 17, SamplerKind::Volume, 1000000,
                              bins(4, 64), 1),
                   1);
  return e;
}

void inequality(const LinearEntropies& lin) {
  const DAMap f = DAMap::linear(IntegerAutomorphism(kRef));
  const InequalityReport r = entropy_inequality_check(lin.u, lin.c, lyapunov_spectrum(f, 100000, 1));
  const bool linear_ok = r.verdict != InequalityVerdict::Refused && std::abs(r.margin) <= r.tolerance;

  const DAMap g = reference_da_map(0.05);
  const EntropyEstimate u = entropy_of(
      g, profile(g, Foliation::Unstable, 0.05, 0.25, 17, SamplerKind::Orbit, 1000000, bins(4, 64), 1),
      1);
  const EntropyEstimate wu = entropy_of(
      g, profile(g, Foliation::Center, 0.05, 0.5, 65, SamplerKind::Orbit, 1000000, bins(4, 1024), 1),
      1);
  const InequalityReport d = entropy_inequality_check(u, wu, lyapunov_spectrum(g, 100000, 1));
  const bool da_ok = d.verdict == InequalityVerdict::Holds;
  report(5, "inequality", linear_ok && da_ok,
         format("linear margin %.4f within %.4f; DA margin %.4f >= -%.4f (%s)", r.margin,
                r.tolerance, d.margin, d.tolerance, to_string(d.verdict)));
}

void disintegration() {
  const DAMap f = DAMap::linear(IntegerAutomorphism(kRef));
  const ConditionalProfile p =
      profile(f, Foliation::Center, 0.02, 0.5, 65, SamplerKind::Volume, 1000000, bins(32, 64), 5);
  std::size_t inside = 0, total = 0;
  const double q = 1.0 / p.leaf_cells();
  for (int c = 0; c < p.transversal_cells(); ++c) {
    const double n = static_cast<double>(p.marginal(c));
    if (n < static_cast<double>(p.bins().floor)) continue;
    const double sd = std::sqrt(n * q * (1.0 - q));
    for (int l = 0; l < p.leaf_cells(); ++l, ++total)
      if (std::abs(static_cast<double>(p.joint(c, l)) - n * q) <= 3.0 * sd) ++inside;
  }
  SamplerSpec delta;
  delta.kind = SamplerKind::Delta;
  delta.samples = 1000;
  delta.delta_point = TorusPoint(0.5, 0.5, 0.5);
  BoxSpec b;
  b.center = LiftPoint{{0.5, 0.5, 0.5}};
  b.radius = 0.02;
  b.half_length = 0.5;
  b.leaf_nodes = 65;
  g_rokhlin.push_back(disintegrate(f, build_box(f, b), delta, bins(8, 64)).rokhlin_identity_holds());
  const bool identity = std::all_of(g_rokhlin.begin(), g_rokhlin.end(), [](bool v) { return v; });
  const double frac = total ? static_cast<double>(inside) / static_cast<double>(total) : 0.0;
  report(8, "disintegration", identity && frac >= 0.99,
         format("identity exact on %zu profiles: %s; uniform within 3 sd in %.2f%% of %zu bins",
                g_rokhlin.size(), identity ? "yes" : "no", 100 * frac, total));
}

// ---- 6 ----------------------------------------------------------------------

void growth() {
  const DAMap lin = DAMap::linear(IntegerAutomorphism(kRef));
  const DAMap da = reference_da_map(0.05);
  const auto& l = lin.base().splitting().eigenvalues;
  const double log_uu = std::log(l[2]), log_c = std::log(l[1]);
  const std::vector<Vec3> points{{0.45, 0.52, 0.5}, {0.13, 0.71, 0.29}, {0.8, 0.35, 0.62}};
  double lin_err = 0.0, uu_excess = -1.0, c_excess = -1.0;
  for (const Vec3& p : points) {
    const auto rate = [&](const DAMap& f, Foliation fol) {
      const bool uu = fol == Foliation::StrongUnstable;
      const LeafSegment s = trace_leaf(f, LiftPoint{p}, fol, uu ? 5e-10 : 5e-3, uu ? 1e-10 : 1e-3);
      return growth_rate(f, s, 25).rate;
    };
    lin_err = std::max({lin_err, std::abs(rate(lin, Foliation::StrongUnstable) - log_uu),
                        std::abs(rate(lin, Foliation::Center) - log_c)});
    uu_excess = std::max(uu_excess, rate(da, Foliation::StrongUnstable) - log_uu);
    c_excess = std::max(c_excess, rate(da, Foliation::Center) - log_c);
  }
  report(6, "growth", lin_err <= 1e-6 && uu_excess <= 0.02 && c_excess <= 0.02,
         format("linear error %.2e; DA max G - log l3 = %+.4f, max G - log l2 = %+.4f", lin_err,
                uu_excess, c_excess));
}

// ---- 7 ----------------------------------------------------------------------

void pliss() {
  const auto t0 = std::chrono::steady_clock::now();
  std::size_t mismatches = 0, sequences = 0;
  std::vector<double> a(12);
  for (int code = 0; code < 531441; ++code, ++sequences) {
    int c = code;
    for (double& v : a) {
      v = static_cast<double>(c % 3 - 1);
      c /= 3;
    }
    if (pliss_blocks(a, 0.5).indices != oracle::pliss_brute_force(a, 0.5)) ++mismatches;
  }
  const double secs = seconds_since(t0);
  report(7, "pliss", mismatches == 0 && secs < 60.0,
         format("%zu of %zu sequences disagree with brute force, %.2f s", mismatches, sequences, secs));
}

// ---- 9 to 12 ----------------------------------------------------------------

void kan_validation() {
  bool ok = true;
  std::string detail;
  for (auto [a, s] : {std::pair{1.0 / 32, 0.0}, {0.25, 0.0}, {0.25, 0.1}}) {
    const KanValidation v = kan_check(KanMap(a, s));
    const double exact = std::log((1.0 + std::sqrt(1.0 - a * a)) / 2.0);
    const double err = std::max(std::abs(v.log_integral[0] - exact), std::abs(v.log_integral[1] - exact));
    ok = ok && v.passed && err <= 1e-10;
    detail += format("(%g, %g) %s %.6e err %.1e; ", a, s, v.passed ? "ok" : "rejected",
                     v.log_integral[0], err);
  }
  const double q32 = kan_check(KanMap(1.0 / 32, 0)).log_integral[0];
  const double q4 = kan_check(KanMap(0.25, 0)).log_integral[0];
  const bool quoted = std::abs(q32 + 2.443e-4) <= 1e-6 && std::abs(q4 + 1.6005e-2) <= 1e-6;
  report(9, "kan-validate", ok && quoted,
         detail + (quoted ? "quoted values agree to their rounding" : "quoted values differ"));
}

void kan_holonomy() {
  const HolonomyMap id = center_holonomy(KanMap(0.25, 0.0), 512, 25);
  double id_err = 0.0;
  for (std::size_t i = 0; i < id.theta.size(); ++i)
    id_err = std::max(id_err, std::abs(id.image[i] - id.theta[i]));
  const HolonomyMap h = center_holonomy(KanMap(0.25, 0.1), 512, 25);
  const double conj = h.max_conjugacy_residual();
  report(10, "kan-holonomy", id_err <= 1e-12 && conj <= 1e-6 && h.strictly_monotone(),
         format("s = 0 max |pi - id| %.1e; s = 0.1 conjugacy %.2e, monotone %s, contraction %.4f",
                id_err, conj, h.strictly_monotone() ? "yes" : "no", h.contraction));
}

void kan_singularity() {
  const auto t0 = std::chrono::steady_clock::now();
  const KanMap flat(0.25, 0.0), bent(0.25, 0.1);
  const SingularityReport r0 = singularity_test(flat, center_holonomy(flat, 1024, 25));
  const SingularityReport r1 = singularity_test(bent, center_holonomy(bent, 1024, 25));
  const double secs = seconds_since(t0);
  const double hyp_err = std::abs(r1.hypothesis - 2 * kPi * 0.1);
  const bool ok = r0.delta <= 3 * r0.standard_error && r1.delta > 3 * r1.standard_error &&
                  hyp_err <= 1e-12 && secs < 300.0;
  report(11, "kan-singular", ok,
         format("s = 0 delta %.2e (se %.2e); s = 0.1 delta %.5f (se %.2e); hypothesis error %.1e; "
                "%.1f s",
                r0.delta, r0.standard_error, r1.delta, r1.standard_error, hyp_err, secs));
}

void kan_basins() {
  BasinOptions o;
  o.grid = 32;
  o.horizon = 100000;
  const BasinReport r = basin_classify(KanMap(0.25, 0.0), o);
  const bool symmetric = std::abs(r.symmetry_z) <= 3.0 && r.symmetry_cell_pass >= 0.95;
  report(12, "kan-basins", symmetric,
         format("symmetry z %.2f, cells within 3 sd %.1f%%; reported: both-basins fraction %.3f, "
                "unresolved %.3f",
                r.symmetry_z, 100 * r.symmetry_cell_pass, r.both_fraction, r.unresolved_fraction));
}

// ---- 13 ---------------------------------------------------------------------

std::string run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "phlab");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return std::to_string(code) + "\n" + out.str();
}

void determinism() {
  const std::vector<std::vector<std::string>> experiments{
      {"spectrum", "-p", "length=20000", "-p", "starts=4"},
      {"semiconj", "residual", "-p", "points=2000"},
      {"semiconj", "fiber", "-p", "points=4"},
      {"growth", "-p", "n_max=12"},
      {"disint", "-p", "sampler.kind=orbit", "-p", "sampler.samples=50000", "-p", "box.radius=0.05"},
      {"entropy", "-p", "sampler.samples=200000", "-p", "base_points=8"},
      {"pliss", "-p", "length=20000"},
      {"kan", "basins", "--a", "0.25", "-p", "grid=8", "-p", "horizon=20000"},
      {"kan", "measure", "--a", "0.25", "--s", "0.1", "-p", "method=orbit"},
      {"kan", "singularity", "--a", "0.25", "--s", "0.1", "-p", "samples=65536"},
  };
  std::size_t identical = 0;
  std::string differing;
  for (const auto& args : experiments) {
    std::vector<std::string> outputs;
    for (const char* workers : {"1", "1", "2", "4"}) {
      auto a = args;
      a.insert(a.end(), {"--seed", "7", "--workers", workers});
      outputs.push_back(run_cli(a));
    }
    const bool same = outputs[0].rfind("0\n", 0) == 0 &&
                      std::all_of(outputs.begin(), outputs.end(),
                                  [&](const std::string& o) { return o == outputs[0]; });
    if (same)
      ++identical;
    else
      differing += " " + args[0];
  }
  report(13, "determinism", identical == experiments.size(),
         format("%zu of %zu experiments byte-identical across reruns and 1/2/4 workers%s", identical,
                experiments.size(), differing.c_str()));
}

}  // namespace

int main() {
  const auto t0 = std::chrono::steady_clock::now();
  guarded(1, "spectrum", spectrum);
  guarded(2, "lyapunov", lyapunov);
  guarded(3, "semiconjugacy", semiconjugacy);
  LinearEntropies lin;
  bool have_lin = false;
  guarded(4, "entropy", [&] {
    lin = linear_entropy();
    have_lin = true;
  });
  guarded(5, "inequality", [&] {
    if (!have_lin) throw std::runtime_error("linear entropies unavailable");
    inequality(lin);
  });
  guarded(6, "growth", growth);
  guarded(7, "pliss", pliss);
  guarded(8, "disintegration", disintegration);
  guarded(9, "kan-validate", kan_validation);
  guarded(10, "kan-holonomy", kan_holonomy);
  guarded(11, "kan-singular", kan_singularity);
  guarded(12, "kan-basins", kan_basins);
  guarded(13, "determinism", determinism);
  std::printf("%d of 13 criteria failed, %.1f s\n", g_failures, seconds_since(t0));
  return g_failures == 0 ? 0 : 1;
}
