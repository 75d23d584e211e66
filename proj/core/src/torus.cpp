#include "phlab/torus.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "phlab/error.hpp"

namespace phlab {

namespace {

constexpr double kSeamClamp = 1e-15;

double eval_cubic(const std::array<double, 3>& c, double x) {
  return ((x + c[2]) * x + c[1]) * x + c[0];
}

double eval_cubic_derivative(const std::array<double, 3>& c, double x) {
  return (3.0 * x + 2.0 * c[2]) * x + c[1];
}

// Bisection on a bracket with a sign change, followed by guarded Newton
// polishing. Returns the root to full double precision.
double bracketed_root(const std::array<double, 3>& c, double lo, double hi) {
  double flo = eval_cubic(c, lo);
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double fm = eval_cubic(c, mid);
    if (fm == 0.0) return mid;
    if ((fm < 0.0) == (flo < 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  double x = 0.5 * (lo + hi);
  for (int it = 0; it < 3; ++it) {
    const double d = eval_cubic_derivative(c, x);
    if (d == 0.0) break;
    const double next = x - eval_cubic(c, x) / d;
    if (next < lo || next > hi) break;
    x = next;
  }
  return x;
}

Vec3 kernel_direction(const IntMat3& m, double lambda) {
  const Vec3 r0{static_cast<double>(m[0]) - lambda, static_cast<double>(m[1]),
                static_cast<double>(m[2])};
  const Vec3 r1{static_cast<double>(m[3]), static_cast<double>(m[4]) - lambda,
                static_cast<double>(m[5])};
  const Vec3 r2{static_cast<double>(m[6]), static_cast<double>(m[7]),
                static_cast<double>(m[8]) - lambda};
  const std::array<Vec3, 3> candidates{cross(r0, r1), cross(r0, r2), cross(r1, r2)};
  Vec3 best = candidates[0];
  for (const auto& c : candidates)
    if (norm(c) > norm(best)) best = c;
  best = normalized(best);
  // Deterministic sign: the largest-magnitude component is positive.
  std::size_t k = 0;
  for (std::size_t i = 1; i < 3; ++i)
    if (std::abs(best[i]) > std::abs(best[k])) k = i;
  if (best[k] < 0.0) best = -best;
  return best;
}

Mat3 to_real(const IntMat3& m) {
  Mat3 r;
  for (std::size_t k = 0; k < 9; ++k) r.a[k] = static_cast<double>(m[k]);
  return r;
}

LiftPoint int_apply(const IntMat3& m, const Vec3& v) {
  return LiftPoint{to_real(m) * v};
}

}  // namespace

double wrap_coordinate(double v) {
  double r = v - std::floor(v);
  if (r >= 1.0 - kSeamClamp) r = 0.0;
  if (r < 0.0) r = 0.0;
  return r;
}

TorusPoint::TorusPoint(double x, double y, double z)
    : c_{wrap_coordinate(x), wrap_coordinate(y), wrap_coordinate(z)} {}

TorusPoint wrap(const LiftPoint& p) { return TorusPoint(p.r); }

Vec3 torus_displacement(const TorusPoint& from, const TorusPoint& to) {
  const Vec3 d = to.coords() - from.coords();
  Vec3 best = d;
  double best_n2 = dot(d, d);
  for (int i = -1; i <= 1; ++i)
    for (int j = -1; j <= 1; ++j)
      for (int k = -1; k <= 1; ++k) {
        const Vec3 c = d + Vec3{static_cast<double>(i), static_cast<double>(j),
                                static_cast<double>(k)};
        const double n2 = dot(c, c);
        if (n2 < best_n2) {
          best_n2 = n2;
          best = c;
        }
      }
  return best;
}

double torus_distance(const TorusPoint& a, const TorusPoint& b) {
  return norm(torus_displacement(a, b));
}

std::int64_t determinant(const IntMat3& m) {
  return m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6]) +
         m[2] * (m[3] * m[7] - m[4] * m[6]);
}

std::array<double, 3> characteristic_polynomial(const IntMat3& m) {
  const std::int64_t trace = m[0] + m[4] + m[8];
  const std::int64_t minors = (m[0] * m[4] - m[1] * m[3]) + (m[0] * m[8] - m[2] * m[6]) +
                              (m[4] * m[8] - m[5] * m[7]);
  return {static_cast<double>(-determinant(m)), static_cast<double>(minors),
          static_cast<double>(-trace)};
}

HyperbolicSplitting spectral_split(const IntMat3& m) {
  const std::int64_t det = determinant(m);
  if (det != 1 && det != -1)
    throw Error(ErrorCode::InvalidModel,
                "determinant is " + std::to_string(det) + ", expected +-1");

  const auto c = characteristic_polynomial(m);
  // p'(x) = 3x^2 + 2 c2 x + c1; three distinct real roots need two critical
  // points with p(left) > 0 > p(right).
  const double disc = 4.0 * c[2] * c[2] - 12.0 * c[1];
  if (disc <= 0.0)
    throw Error(ErrorCode::NotHyperbolic, "spectrum has a repeated or complex pair");
  const double sq = std::sqrt(disc);
  const double left = (-2.0 * c[2] - sq) / 6.0;
  const double right = (-2.0 * c[2] + sq) / 6.0;
  if (!(eval_cubic(c, left) > 0.0 && eval_cubic(c, right) < 0.0))
    throw Error(ErrorCode::NotHyperbolic, "spectrum has a complex or repeated pair");

  const double bound = 1.0 + std::max({std::abs(c[0]), std::abs(c[1]), std::abs(c[2])});
  HyperbolicSplitting s;
  s.eigenvalues = {bracketed_root(c, -bound, left), bracketed_root(c, left, right),
                   bracketed_root(c, right, bound)};

  for (double l : s.eigenvalues)
    if (std::abs(std::abs(l) - 1.0) < 1e-12)
      throw Error(ErrorCode::NotHyperbolic, "eigenvalue of modulus one");
  const auto& l = s.eigenvalues;
  if (!(l[0] > 0.0 && l[0] < 1.0 && l[1] > 1.0 && l[2] > l[1]))
    throw Error(ErrorCode::WrongSignature,
                "spectrum (" + std::to_string(l[0]) + ", " + std::to_string(l[1]) + ", " +
                    std::to_string(l[2]) + ") is not of the form l1 < 1 < l2 < l3");

  for (std::size_t i = 0; i < 3; ++i) s.eigenvectors[i] = kernel_direction(m, l[i]);
  const Mat3 dual = inverse(s.basis());
  for (std::size_t i = 0; i < 3; ++i) s.dual[i] = dual.row(i);
  return s;
}

IntegerAutomorphism::IntegerAutomorphism(const IntMat3& m) : m_(m), split_(spectral_split(m)) {
  // Adjugate divided by det = +-1 is again an integer matrix.
  const std::int64_t det = determinant(m);
  const auto at = [&](int i, int j) { return m[3 * i + j]; };
  IntMat3 adj{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      const int r0 = (j + 1) % 3, r1 = (j + 2) % 3;
      const int c0 = (i + 1) % 3, c1 = (i + 2) % 3;
      adj[3 * i + j] = at(r0, c0) * at(r1, c1) - at(r0, c1) * at(r1, c0);
    }
  for (auto& v : adj) v *= det;
  inv_ = adj;
}

Mat3 IntegerAutomorphism::real_matrix() const { return to_real(m_); }
Mat3 IntegerAutomorphism::real_inverse() const { return to_real(inv_); }

LiftPoint IntegerAutomorphism::apply_lift(const LiftPoint& q) const { return int_apply(m_, q.r); }

TorusPoint IntegerAutomorphism::apply(const TorusPoint& p) const {
  return wrap(apply_lift(lift(p)));
}

LiftPoint IntegerAutomorphism::apply_inverse_lift(const LiftPoint& q) const {
  return int_apply(inv_, q.r);
}

TorusPoint IntegerAutomorphism::apply_inverse(const TorusPoint& p) const {
  return wrap(apply_inverse_lift(lift(p)));
}

IntegerAutomorphism reference_automorphism() {
  return IntegerAutomorphism(IntMat3{1, -1, 0, -1, 2, -1, 0, -1, 2});
}

}  // namespace phlab
