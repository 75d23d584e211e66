#include "phlab/ergodic_stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "phlab/error.hpp"
#include "phlab/parallel.hpp"
#include "phlab/random.hpp"

namespace phlab {

namespace {

// Modified Gram-Schmidt on the columns of m; returns log of the diagonal of R.
std::array<double, 3> orthonormalize(std::array<Vec3, 3>& q) {
  std::array<double, 3> logs{};
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < i; ++j) q[i] -= dot(q[i], q[j]) * q[j];
    // A second pass keeps the frame orthogonal to rounding.
    for (int j = 0; j < i; ++j) q[i] -= dot(q[i], q[j]) * q[j];
    const double r = norm(q[i]);
    logs[i] = std::log(r);
    q[i] = q[i] * (1.0 / r);
  }
  return logs;
}

TorusPoint seeded_start(std::uint64_t seed, std::uint64_t task) {
  Rng rng(derive_seed(seed, 0, task));
  const double x = rng.uniform(), y = rng.uniform(), z = rng.uniform();
  return TorusPoint(x, y, z);
}

}  // namespace

ExponentReport lyapunov_spectrum(const DAMap& f, const TorusPoint& start, std::size_t n) {
  if (n < 1000) throw Error(ErrorCode::InvalidArgument, "orbit length must be >= 1000");
  std::array<Vec3, 3> q{Vec3{1, 0, 0}, Vec3{0, 1, 0}, Vec3{0, 0, 1}};
  std::array<double, 3> sums{}, half{};
  double log_det = 0.0;
  TorusPoint x = start;
  for (std::size_t k = 0; k < n; ++k) {
    const Mat3 df = f.derivative(x);
    for (auto& v : q) v = df * v;
    const auto logs = orthonormalize(q);
    for (int i = 0; i < 3; ++i) sums[i] += logs[i];
    log_det += std::log(std::abs(determinant(df)));
    x = f.evaluate(x);
    if (k + 1 == n / 2) half = sums;
  }
  ExponentReport rep;
  rep.length = n;
  rep.start = start;
  rep.log_jacobian = log_det / static_cast<double>(n);
  const double h = static_cast<double>(n / 2);
  for (int i = 0; i < 3; ++i) {
    rep.exponents[i] = sums[i] / static_cast<double>(n);
    rep.half_width = std::max(rep.half_width, std::abs(rep.exponents[i] - half[i] / h));
  }
  // Gram-Schmidt order already yields descending exponents for generic
  // frames; sorting guards the degenerate cases.
  std::sort(rep.exponents.begin(), rep.exponents.end(), std::greater<>());
  return rep;
}

ExponentReport lyapunov_spectrum(const DAMap& f, std::size_t n, std::uint64_t seed) {
  ExponentReport rep = lyapunov_spectrum(f, seeded_start(seed, 0), n);
  rep.seed = seed;
  return rep;
}

std::vector<ExponentReport> lyapunov_batch(const DAMap& f, std::size_t starts, std::size_t n,
                                           std::uint64_t seed, int workers) {
  std::vector<ExponentReport> out(starts);
  parallel_for(starts, workers, [&](std::size_t k) {
    out[k] = lyapunov_spectrum(f, seeded_start(seed, k), n);
    out[k].seed = seed;
  });
  return out;
}

std::vector<double> center_log_multipliers(const DAMap& f, const TorusPoint& start,
                                           std::size_t n) {
  std::vector<double> out;
  out.reserve(n);
  if (f.is_linear()) {
    const double v = std::log(f.base().splitting().eigenvalues[1]);
    out.assign(n, v);
    return out;
  }
  const OrbitBundles ob = orbit_bundles(f, start, n);
  for (std::size_t k = 0; k < n; ++k)
    out.push_back(std::log(norm(f.derivative(ob.points[k]) * ob.center[k])));
  return out;
}

CenterExponentReport center_exponent(const DAMap& f, const TorusPoint& start, std::size_t n) {
  if (n < 2) throw Error(ErrorCode::InvalidArgument, "orbit length must be >= 2");
  const auto series = center_log_multipliers(f, start, n);
  const std::size_t h = n / 2;
  const double head = std::accumulate(series.begin(), series.begin() + h, 0.0);
  const double total = std::accumulate(series.begin() + h, series.end(), head);
  CenterExponentReport rep;
  rep.length = n;
  rep.value = total / static_cast<double>(n);
  rep.half_width = std::abs(rep.value - head / static_cast<double>(h));
  return rep;
}

double birkhoff_average(const DAMap& f, const std::function<double(const TorusPoint&)>& obs,
                        const TorusPoint& start, std::size_t n) {
  if (n == 0) throw Error(ErrorCode::InvalidArgument, "orbit length must be positive");
  double sum = 0.0;
  TorusPoint x = start;
  for (std::size_t k = 0; k < n; ++k) {
    sum += obs(x);
    x = f.evaluate(x);
  }
  return sum / static_cast<double>(n);
}

double EmpiricalMeasure::total_weight() const {
  return std::accumulate(weights.begin(), weights.end(), 0.0);
}

EmpiricalMeasure orbit_measure(const DAMap& f, const TorusPoint& start, std::size_t n,
                               std::size_t burn_in) {
  EmpiricalMeasure m;
  m.points.reserve(n);
  TorusPoint x = start;
  for (std::size_t k = 0; k < burn_in; ++k) x = f.evaluate(x);
  for (std::size_t k = 0; k < n; ++k) {
    m.points.push_back(x);
    x = f.evaluate(x);
  }
  m.weights.assign(n, n ? 1.0 / static_cast<double>(n) : 0.0);
  return m;
}

std::size_t PlissReport::censored_count() const {
  return static_cast<std::size_t>(
      indices.end() - std::lower_bound(indices.begin(), indices.end(), censored_from));
}

PlissReport pliss_blocks(const std::vector<double>& a, double threshold, std::size_t horizon) {
  const std::size_t n = a.size();
  PlissReport rep;
  rep.threshold = threshold;
  rep.series_length = n;
  if (horizon == 0) horizon = std::max<std::size_t>(1, n / 10);
  rep.censored_from = n > horizon ? n - horizon : 0;
  if (n == 0) return rep;
  // S[k] = sum_{i<k} (a[i] - threshold). Position k qualifies iff
  // S[q] < S[k] for every q in (k, n].
  std::vector<double> s(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) s[i + 1] = s[i] + (a[i] - threshold);
  double suffix_max = -std::numeric_limits<double>::infinity();
  std::vector<char> ok(n, 0);
  for (std::size_t k = n; k-- > 0;) {
    suffix_max = std::max(suffix_max, s[k + 1]);
    ok[k] = suffix_max < s[k];
  }
  for (std::size_t k = 0; k < n; ++k)
    if (ok[k]) rep.indices.push_back(k);
  rep.density = static_cast<double>(rep.indices.size()) / static_cast<double>(n);
  return rep;
}

PlissSetReport pliss_set_fraction(const DAMap& f, const TorusPoint& start, std::size_t n,
                                  double epsilon) {
  if (!(epsilon > 0.0)) throw Error(ErrorCode::InvalidArgument, "epsilon must be positive");
  const auto series = center_log_multipliers(f, start, n);
  PlissSetReport rep;
  rep.length = n;
  rep.epsilon = epsilon;
  rep.center_exponent =
      std::accumulate(series.begin(), series.end(), 0.0) / static_cast<double>(n);
  const PlissReport p = pliss_blocks(series, rep.center_exponent + epsilon);
  rep.density = p.density;
  rep.uncensored_density =
      static_cast<double>(p.indices.size() - p.censored_count()) / static_cast<double>(n);
  return rep;
}

}  // namespace phlab
