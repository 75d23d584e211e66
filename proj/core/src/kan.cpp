#include "phlab/kan.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "phlab/error.hpp"
#include "phlab/parallel.hpp"
#include "phlab/random.hpp"

namespace phlab {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double frac(double x) {
  const double f = x - std::floor(x);
  return f >= 1.0 ? 0.0 : f;
}

// Nearest representative of x - y modulo 1.
double circle_gap(double x, double y) {
  const double d = x - y;
  return d - std::round(d);
}

}  // namespace

double KanMap::fiber(double theta, double t) const {
  return t - a_ * t * (1.0 - t) * std::cos(kTwoPi * theta);
}

double KanMap::fiber_derivative(double theta, double t) const {
  return 1.0 - a_ * (1.0 - 2.0 * t) * std::cos(kTwoPi * theta);
}

double KanMap::boundary_lift(int boundary, double x) const {
  return 3.0 * x + (boundary ? s_ * std::sin(kTwoPi * x) : 0.0);
}

double KanMap::boundary_map(int boundary, double theta) const {
  return frac(boundary_lift(boundary, theta));
}

double KanMap::boundary_derivative(int boundary, double theta) const {
  return 3.0 + (boundary ? kTwoPi * s_ * std::cos(kTwoPi * theta) : 0.0);
}

CylinderPoint KanMap::evaluate(const CylinderPoint& p) const {
  return {frac(3.0 * p.theta + s_ * p.t * std::sin(kTwoPi * p.theta)), fiber(p.theta, p.t)};
}

Mat2 KanMap::derivative(const CylinderPoint& p) const {
  const double c = std::cos(kTwoPi * p.theta), s = std::sin(kTwoPi * p.theta);
  return {3.0 + kTwoPi * s_ * p.t * c, s_ * s, kTwoPi * a_ * p.t * (1.0 - p.t) * s,
          fiber_derivative(p.theta, p.t)};
}

double kan_log_integral(double a) { return std::log((1.0 + std::sqrt(1.0 - a * a)) / 2.0); }

KanValidation kan_check(const KanMap& m) {
  KanValidation v;
  const double a = m.amplitude(), s = m.perturbation();
  bool failed = false;
  auto fail = [&](int index, std::string msg) {
    if (!failed) {
      failed = true;
      v.failed_condition = index;
      v.message = std::move(msg);
    }
  };
  if (!std::isfinite(a) || !std::isfinite(s) || a < 0.0 || a > 0.5)
    fail(0, "amplitude a must lie in (0, 1/2]");

  // (1) Both boundary circles are fixed by every fiber map.
  for (int i = 0; i < 1024; ++i) {
    const double th = i / 1024.0;
    v.boundary_defect =
        std::max(v.boundary_defect, std::abs(m.fiber(th, 0.0)) + std::abs(m.fiber(th, 1.0) - 1.0));
  }
  if (v.boundary_defect != 0.0) fail(1, "h_theta does not fix the boundary");

  // (2) sup |d_t h| = 1 + a, attained at t in {0, 1}.
  v.derivative_sup = 1.0 + std::abs(a);
  if (!(v.derivative_sup < 3.0)) fail(2, "fiber derivative bound 1 + a must stay below 3");

  // (3) Periodic trapezoid: exponentially convergent for analytic integrands.
  v.log_integral_exact = kan_log_integral(a);
  const int nodes = 512;
  for (int i = 0; i < 2; ++i) {
    double sum = 0.0;
    for (int k = 0; k < nodes; ++k) sum += std::log(std::abs(m.fiber_derivative(k / double(nodes), i)));
    v.log_integral[i] = sum / nodes;
    v.quadrature_error = std::max(v.quadrature_error, std::abs(v.log_integral[i] - v.log_integral_exact));
  }
  if (!(v.log_integral[0] < 0.0 && v.log_integral[1] < 0.0))
    fail(3, "boundary log-derivative integral is not negative");
  else if (v.quadrature_error > 1e-10)
    fail(3, "quadrature disagrees with the closed form");

  // (4) Attracting fixed points of opposite boundaries and strict ordering.
  v.fixed_point_multiplier =
      std::max(std::abs(m.fiber_derivative(0.0, 0.0)), std::abs(m.fiber_derivative(0.5, 1.0)));
  v.order_margin = std::numeric_limits<double>::infinity();
  for (int k = 1; k < 100; ++k) {
    const double t = k / 100.0;
    v.order_margin = std::min({v.order_margin, t - m.fiber(0.0, t), m.fiber(0.5, t) - t});
  }
  if (!(v.fixed_point_multiplier < 1.0) || !(v.order_margin > 0.0))
    fail(4, "need |h'_0(0)| < 1, |h'_1/2(1)| < 1 and h_0(t) < t < h_1/2(t)");

  v.base_expansion = 3.0 - kTwoPi * std::abs(s);
  if (!(v.base_expansion > 1.0)) fail(5, "boundary base maps must be expanding: 3 - 2 pi |s| > 1");

  v.passed = !failed;
  return v;
}

KanValidation kan_validate(const KanMap& m) {
  KanValidation v = kan_check(m);
  if (!v.passed)
    throw Error(ErrorCode::ConditionViolated,
                "condition (" + std::to_string(v.failed_condition) + "): " + v.message,
                v.failed_condition);
  return v;
}

BasinReport basin_classify(const KanMap& m, const BasinOptions& opt) {
  if (opt.grid < 2 || opt.grid % 2) throw Error(ErrorCode::InvalidArgument, "grid must be even");
  if (!(opt.trap > 0.0 && opt.trap < 0.5)) throw Error(ErrorCode::InvalidArgument, "trap must be in (0, 1/2)");
  const int g = opt.grid;
  BasinReport rep;
  rep.grid = g;
  rep.cells.resize(static_cast<std::size_t>(g) * g);
  parallel_for(rep.cells.size(), opt.workers, [&](std::size_t idx) {
    const int i = static_cast<int>(idx % g), j = static_cast<int>(idx / g);
    Rng rng(derive_seed(opt.seed, 3, idx));
    BasinCell& cell = rep.cells[idx];
    for (int k = 0; k < opt.samples_per_cell; ++k) {
      CylinderPoint p{(i + rng.uniform()) / g, (j + rng.uniform()) / g};
      int label = -1;
      for (std::size_t n = 0; n <= opt.horizon; ++n) {
        if (p.t < opt.trap) {
          label = 0;
          break;
        }
        if (p.t > 1.0 - opt.trap) {
          label = 1;
          break;
        }
        if (n < opt.horizon) p = m.evaluate(p);
      }
      if (label == 0) ++cell.bottom;
      else if (label == 1) ++cell.top;
      else ++cell.unresolved;
    }
  });

  std::size_t both = 0, unresolved = 0, bottom = 0, top = 0, pass = 0;
  const double n = opt.samples_per_cell;
  for (int j = 0; j < g; ++j)
    for (int i = 0; i < g; ++i) {
      const BasinCell& c = rep.at(i, j);
      both += c.bottom > 0 && c.top > 0;
      unresolved += c.unresolved;
      bottom += c.bottom;
      top += c.top;
      const BasinCell& mirror = rep.at((i + g / 2) % g, g - 1 - j);
      const double p = (c.bottom + mirror.top) / (2.0 * n);
      const double se = std::sqrt(2.0 * p * (1.0 - p) / n);
      const double z = se > 0.0 ? (c.bottom - mirror.top) / n / se : 0.0;
      pass += std::abs(z) <= 3.0;
    }
  const double cells = static_cast<double>(rep.cells.size());
  rep.both_fraction = both / cells;
  rep.unresolved_fraction = unresolved / (cells * n);
  rep.symmetry_cell_pass = pass / cells;
  rep.trapped_total = bottom + top;
  const double total = cells * n;
  const double p = (bottom + top) / (2.0 * total);
  const double se = std::sqrt(2.0 * p * (1.0 - p) / total);
  rep.symmetry_z = se > 0.0 ? (static_cast<double>(bottom) - static_cast<double>(top)) / total / se : 0.0;
  return rep;
}

namespace {

// Solves boundary_lift(x) = y for x in [lo, hi] (lift is increasing).
double inverse_lift(const KanMap& m, int boundary, double y, double lo, double hi) {
  double x = 0.5 * (lo + hi);
  for (int it = 0; it < 100; ++it) {
    const double r = m.boundary_lift(boundary, x) - y;
    if (r > 0.0) hi = x;
    else lo = x;
    const double nx = x - r / m.boundary_derivative(boundary, x);
    const double next = (nx > lo && nx < hi) ? nx : 0.5 * (lo + hi);
    if (std::abs(next - x) <= 1e-17) return next;
    x = next;
  }
  return x;
}

// Cell average of log|d_t h_theta(boundary)| by 4-point Gauss-Legendre.
double cell_log_average(const KanMap& m, int boundary, double lo, double hi) {
  static constexpr std::array<double, 4> nodes{-0.8611363115940526, -0.3399810435848563,
                                               0.3399810435848563, 0.8611363115940526};
  static constexpr std::array<double, 4> weights{0.3478548451374538, 0.6521451548625461,
                                                 0.6521451548625461, 0.3478548451374538};
  double acc = 0.0;
  for (int k = 0; k < 4; ++k) {
    const double th = 0.5 * (lo + hi) + 0.5 * (hi - lo) * nodes[k];
    acc += weights[k] * std::log(std::abs(m.fiber_derivative(th, boundary)));
  }
  return 0.5 * acc;
}

struct Transition {
  int from;
  int to;
  double p;
};

std::vector<Transition> ulam_matrix(const KanMap& m, int boundary, int k) {
  std::vector<Transition> out;
  const double kd = k;
  for (int i = 0; i < k; ++i) {
    const double x0 = i / kd, x1 = (i + 1) / kd;
    const double y0 = m.boundary_lift(boundary, x0) * kd, y1 = m.boundary_lift(boundary, x1) * kd;
    // Breakpoints at integer multiples of 1/K strictly inside the image.
    std::vector<double> xs{x0}, ys{y0};
    for (double b = std::floor(y0) + 1.0; b < y1; b += 1.0) {
      if (b - y0 < 1e-9 || y1 - b < 1e-9) continue;
      xs.push_back(inverse_lift(m, boundary, b / kd, x0, x1));
      ys.push_back(b);
    }
    xs.push_back(x1);
    ys.push_back(y1);
    for (std::size_t s = 0; s + 1 < xs.size(); ++s) {
      const double p = (xs[s + 1] - xs[s]) * kd;
      const long cell = static_cast<long>(std::floor(0.5 * (ys[s] + ys[s + 1])));
      const int to = static_cast<int>(((cell % k) + k) % k);
      if (p > 0.0) out.push_back({i, to, p});
    }
  }
  return out;
}

}  // namespace

BoundaryMeasure boundary_measure(const KanMap& m, int boundary, const BoundaryMeasureOptions& opt) {
  if (boundary != 0 && boundary != 1) throw Error(ErrorCode::InvalidArgument, "boundary must be 0 or 1");
  if (opt.cells < 1) throw Error(ErrorCode::InvalidArgument, "cell count must be positive");
  if (!(3.0 - kTwoPi * std::abs(m.perturbation()) > 1.0))
    throw Error(ErrorCode::InvalidArgument, "boundary map is not expanding");
  const int k = opt.cells;
  BoundaryMeasure bm;
  bm.boundary = boundary;
  bm.method = opt.method;
  std::vector<double> mass(k, 1.0 / k);
  if (opt.method == MeasureMethod::Ulam) {
    const auto trans = ulam_matrix(m, boundary, k);
    std::vector<double> next(k);
    bool converged = false;
    for (int it = 1; it <= opt.max_iterations; ++it) {
      std::fill(next.begin(), next.end(), 0.0);
      for (const auto& tr : trans) next[tr.to] += mass[tr.from] * tr.p;
      const double total = std::accumulate(next.begin(), next.end(), 0.0);
      double change = 0.0;
      for (int c = 0; c < k; ++c) {
        next[c] /= total;
        change += std::abs(next[c] - mass[c]);
      }
      mass.swap(next);
      bm.iterations = static_cast<std::size_t>(it);
      bm.last_change = change;
      if (change < opt.tolerance) {
        converged = true;
        break;
      }
    }
    if (!converged)
      throw Error(ErrorCode::UlamNotConverged,
                  "L1 change " + std::to_string(bm.last_change) + " after " +
                      std::to_string(bm.iterations) + " sweeps");
    bm.exponent = 0.0;
    for (int c = 0; c < k; ++c) bm.exponent += mass[c] * cell_log_average(m, boundary, c / double(k), (c + 1) / double(k));
  } else {
    std::vector<std::size_t> counts(k, 0);
    Rng rng(derive_seed(opt.seed, 5, static_cast<std::uint64_t>(boundary)));
    double x = rng.uniform();
    for (std::size_t n = 0; n < opt.burn_in; ++n) x = m.boundary_map(boundary, x);
    double log_sum = 0.0;
    for (std::size_t n = 0; n < opt.orbit_length; ++n) {
      ++counts[std::min(k - 1, static_cast<int>(x * k))];
      log_sum += std::log(std::abs(m.fiber_derivative(x, boundary)));
      x = m.boundary_map(boundary, x);
    }
    const double len = static_cast<double>(opt.orbit_length);
    for (int c = 0; c < k; ++c) mass[c] = counts[c] / len;
    bm.exponent = log_sum / len;
    bm.iterations = opt.orbit_length;
  }
  bm.density.resize(k);
  for (int c = 0; c < k; ++c) bm.density[c] = mass[c] * k;
  return bm;
}

double boundary_center_exponent(const KanMap& m, int boundary, std::size_t n, std::uint64_t seed) {
  BoundaryMeasureOptions opt;
  opt.method = MeasureMethod::Orbit;
  opt.orbit_length = n;
  opt.seed = seed;
  opt.cells = 1;
  return boundary_measure(m, boundary, opt).exponent;
}

double holonomy_at(const KanMap& m, double theta, int depth) {
  if (depth < 0) throw Error(ErrorCode::InvalidArgument, "depth must be non-negative");
  theta = frac(theta);
  std::vector<double> orbit(static_cast<std::size_t>(depth) + 1);
  orbit[0] = theta;
  for (int k = 0; k < depth; ++k) orbit[k + 1] = frac(3.0 * orbit[k]);
  const double s = m.perturbation();
  // Top endpoints theta_k + d_k satisfy 3 d_k + s sin(2 pi (theta_k + d_k)) = d_{k+1},
  // with the vertical segment d_n = 0 at depth n. Each backward step contracts.
  double d = 0.0;
  for (int k = depth - 1; k >= 0; --k) {
    const double target = d;
    double x = target / 3.0;
    for (int it = 0; it < 60; ++it) {
      const double arg = kTwoPi * (orbit[k] + x);
      const double r = 3.0 * x + s * std::sin(arg) - target;
      const double step = r / (3.0 + kTwoPi * s * std::cos(arg));
      x -= step;
      if (std::abs(step) <= 1e-17) break;
    }
    d = x;
  }
  return theta + d;
}

std::vector<CylinderPoint> center_leaf(const KanMap& m, double theta, int depth, int points) {
  if (points < 2) throw Error(ErrorCode::InvalidArgument, "need at least two points");
  theta = frac(theta);
  std::vector<double> orbit(static_cast<std::size_t>(depth) + 1);
  orbit[0] = theta;
  for (int k = 0; k < depth; ++k) orbit[k + 1] = frac(3.0 * orbit[k]);
  const double a = m.amplitude(), s = m.perturbation();
  std::vector<CylinderPoint> out(static_cast<std::size_t>(points));
  for (int j = 0; j < points; ++j) {
    const double tau_top = static_cast<double>(j) / (points - 1);
    double e = 0.0, tau = tau_top;
    for (int k = depth - 1; k >= 0; --k) {
      // Preimage (theta_k + u, v) of (theta_{k+1} + e, tau) on the branch over theta_k.
      double u = e / 3.0, v = tau;
      for (int it = 0; it < 60; ++it) {
        const double arg = kTwoPi * (orbit[k] + u);
        const double c = std::cos(arg), sn = std::sin(arg);
        const double f1 = 3.0 * u + s * v * sn - e;
        const double f2 = v - a * v * (1.0 - v) * c - tau;
        const double j11 = 3.0 + kTwoPi * s * v * c, j12 = s * sn;
        const double j21 = kTwoPi * a * v * (1.0 - v) * sn, j22 = 1.0 - a * (1.0 - 2.0 * v) * c;
        const double det = j11 * j22 - j12 * j21;
        const double du = (f1 * j22 - f2 * j12) / det, dv = (j11 * f2 - j21 * f1) / det;
        u -= du;
        v -= dv;
        if (std::abs(du) + std::abs(dv) <= 1e-16) break;
      }
      e = u;
      tau = std::clamp(v, 0.0, 1.0);
    }
    out[j] = {theta + e, tau};
  }
  return out;
}

double HolonomyMap::operator()(double th) const {
  const double shift = std::floor(th);
  const double x = th - shift;
  const std::size_t n = theta.size();
  const auto it = std::upper_bound(theta.begin(), theta.end(), x);
  std::size_t hi = static_cast<std::size_t>(it - theta.begin());
  double x0, x1, y0, y1;
  if (hi == 0) {
    x0 = theta[n - 1] - 1.0, y0 = image[n - 1] - 1.0, x1 = theta[0], y1 = image[0];
  } else if (hi == n) {
    x0 = theta[n - 1], y0 = image[n - 1], x1 = theta[0] + 1.0, y1 = image[0] + 1.0;
  } else {
    x0 = theta[hi - 1], y0 = image[hi - 1], x1 = theta[hi], y1 = image[hi];
  }
  const double u = (x - x0) / (x1 - x0);
  return shift + y0 + u * (y1 - y0);
}

bool HolonomyMap::strictly_monotone() const {
  for (std::size_t j = 0; j + 1 < image.size(); ++j)
    if (!(image[j + 1] > image[j])) return false;
  return image.empty() || image.back() < image.front() + 1.0;
}

double HolonomyMap::max_conjugacy_residual() const {
  return conjugacy.empty() ? 0.0 : *std::max_element(conjugacy.begin(), conjugacy.end());
}

HolonomyMap HolonomyMap::reversed() const {
  HolonomyMap r = *this;
  const std::size_t n = theta.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  auto reflect = [](double x) { return x == 0.0 ? 0.0 : 1.0 - x; };
  std::sort(order.begin(), order.end(),
            [&](std::size_t i, std::size_t j) { return reflect(theta[i]) < reflect(theta[j]); });
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t i = order[k];
    r.theta[k] = reflect(theta[i]);
    // theta' = -theta_i (+1): pi'(theta') = -pi(theta_i) (+1).
    r.image[k] = -image[i] + (theta[i] == 0.0 ? 0.0 : 1.0);
    r.residual[k] = residual[i];
    r.conjugacy[k] = conjugacy[i];
  }
  return r;
}

HolonomyMap center_holonomy(const KanMap& m, int nodes, int depth, int workers) {
  if (nodes < 2) throw Error(ErrorCode::InvalidArgument, "need at least two nodes");
  if (depth < 2) throw Error(ErrorCode::InvalidArgument, "depth must be >= 2");
  const double a = std::abs(m.amplitude());
  const double base = 3.0 - kTwoPi * std::abs(m.perturbation());
  if (!(base > 1.0 + a))
    throw Error(ErrorCode::NotContracting, "base expansion does not dominate the fiber");
  HolonomyMap h;
  h.depth = depth;
  h.contraction_bound = (1.0 + a) / base + 0.05;
  const std::size_t n = static_cast<std::size_t>(nodes);
  h.theta.resize(n);
  h.image.resize(n);
  h.residual.resize(n);
  h.conjugacy.resize(n);
  // diffs[j * probe + d - 1] = |pi_d - pi_{d-1}| at node j.
  const int probe = std::min(depth, 12);
  std::vector<double> diffs(n * static_cast<std::size_t>(probe), 0.0);
  parallel_for(n, workers, [&](std::size_t j) {
    const double th = static_cast<double>(j) / nodes;
    h.theta[j] = th;
    h.image[j] = holonomy_at(m, th, depth);
    h.residual[j] = std::abs(h.image[j] - holonomy_at(m, th, depth - 1));
    const double lhs = m.boundary_lift(1, h.image[j]);
    const double rhs = holonomy_at(m, frac(3.0 * th), depth);
    h.conjugacy[j] = std::abs(circle_gap(lhs, rhs));
    double last = th;
    for (int d = 1; d <= probe; ++d) {
      const double cur = holonomy_at(m, th, d);
      diffs[j * probe + d - 1] = std::abs(cur - last);
      last = cur;
    }
  });
  // Geometric rate of the sup-norm differences, up to the last depth above
  // rounding. Single nodes are too erratic: the seed offset at depth d depends
  // on where the orbit lands.
  std::vector<double> sup(static_cast<std::size_t>(probe), 0.0);
  for (std::size_t j = 0; j < n; ++j)
    for (int d = 0; d < probe; ++d) sup[d] = std::max(sup[d], diffs[j * probe + d]);
  int last = 0;
  for (int d = 1; d < probe; ++d)
    if (sup[d] > 1e-13) last = d;
  h.contraction = last > 0 && sup[0] > 0.0 ? std::pow(sup[last] / sup[0], 1.0 / last) : 0.0;
  if (h.contraction > h.contraction_bound)
    throw Error(ErrorCode::NotContracting,
                "depth ratio " + std::to_string(h.contraction) + " exceeds " +
                    std::to_string(h.contraction_bound));
  return h;
}

SingularityReport singularity_test(const KanMap& m, const HolonomyMap& pi,
                                   const SingularityOptions& opt) {
  if (opt.blocks < 2 || opt.samples < static_cast<std::size_t>(opt.blocks))
    throw Error(ErrorCode::InvalidArgument, "need at least two blocks with samples");
  const std::size_t b = static_cast<std::size_t>(opt.blocks);
  const std::size_t per = opt.samples / b;
  const std::size_t total = per * b;
  std::vector<double> sum_t(b, 0.0), sum_u(b, 0.0);

  Rng rng0(derive_seed(opt.seed, 6, 0));
  for (std::size_t k = 0; k < total; ++k)
    sum_t[k / per] += std::log(m.boundary_derivative(1, pi(rng0.uniform())));

  Rng rng1(derive_seed(opt.seed, 6, 1));
  double x = rng1.uniform();
  for (std::size_t k = 0; k < opt.burn_in; ++k) x = m.boundary_map(1, x);
  for (std::size_t k = 0; k < total; ++k) {
    sum_u[k / per] += std::log(m.boundary_derivative(1, x));
    x = m.boundary_map(1, x);
  }

  SingularityReport r;
  const double all_t = std::accumulate(sum_t.begin(), sum_t.end(), 0.0);
  const double all_u = std::accumulate(sum_u.begin(), sum_u.end(), 0.0);
  r.transported = all_t / total;
  r.top_exponent = all_u / total;
  r.delta = std::abs(r.transported - r.top_exponent);
  std::vector<double> leave(b);
  const double rest = static_cast<double>(total - per);
  for (std::size_t i = 0; i < b; ++i)
    leave[i] = std::abs((all_t - sum_t[i]) / rest - (all_u - sum_u[i]) / rest);
  const double mean = std::accumulate(leave.begin(), leave.end(), 0.0) / b;
  double ss = 0.0;
  for (double v : leave) ss += (v - mean) * (v - mean);
  r.standard_error = std::sqrt((b - 1.0) / b * ss);

  r.derivative_p0 = m.derivative({0.5, 0.0});
  r.derivative_p1 = m.derivative({0.5, 1.0});
  r.hypothesis = std::abs(r.derivative_p0[0] - r.derivative_p1[0]);
  r.singular = r.delta > 3.0 * r.standard_error;
  return r;
}

}  // namespace phlab
