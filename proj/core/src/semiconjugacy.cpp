#include "phlab/semiconjugacy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "phlab/error.hpp"

namespace phlab {

std::array<double, 3> semiconjugacy_tail_bounds(const DAMap& f, int depth) {
  const HyperbolicSplitting& s = f.base().splitting();
  const double p = f.displacement_sup();
  std::array<double, 3> t{};
  const double l1 = s.eigenvalues[0];
  t[0] = p * norm(s.dual[0]) * std::pow(l1, depth) / (1.0 - l1);
  for (int i = 1; i < 3; ++i) {
    const double l = s.eigenvalues[i];
    t[i] = p * norm(s.dual[i]) * std::pow(l, -(depth + 1)) / (1.0 - 1.0 / l);
  }
  return t;
}

Conjugator::Conjugator(DAMap f, int depth)
    : f_(std::move(f)), depth_(depth), p_sup_(f_.displacement_sup()) {
  if (depth < 1) throw Error(ErrorCode::InvalidArgument, "truncation depth must be >= 1");
  tails_ = semiconjugacy_tail_bounds(f_, depth_);
}

Conjugator Conjugator::with_tolerance(DAMap f, double tolerance, int max_depth) {
  if (!(tolerance > 0.0)) throw Error(ErrorCode::InvalidArgument, "tolerance must be positive");
  int n = 1;
  for (; n < max_depth; ++n) {
    const auto t = semiconjugacy_tail_bounds(f, n);
    if (t[0] + t[1] + t[2] <= tolerance) break;
  }
  return Conjugator(std::move(f), n);
}

double Conjugator::analytic_bound() const {
  const HyperbolicSplitting& s = f_.base().splitting();
  double c = p_sup_ * norm(s.dual[0]) / (1.0 - s.eigenvalues[0]);
  for (int i = 1; i < 3; ++i) c += p_sup_ * norm(s.dual[i]) / (s.eigenvalues[i] - 1.0);
  return c;
}

Vec3 Conjugator::correction_coordinates(const TorusPoint& x) const {
  if (f_.is_linear()) return {};
  const HyperbolicSplitting& s = f_.base().splitting();
  const double l1 = s.eigenvalues[0], l2 = s.eigenvalues[1], l3 = s.eigenvalues[2];

  Vec3 u{};
  // Expanding coordinates: sum_{n<N} lambda^{-(n+1)} p_i(f^n x).
  TorusPoint y = x;
  double w2 = 1.0 / l2, w3 = 1.0 / l3;
  for (int n = 0; n < depth_; ++n) {
    const Vec3 p = f_.displacement(y);
    u.y += w2 * dot(s.dual[1], p);
    u.z += w3 * dot(s.dual[2], p);
    w2 /= l2;
    w3 /= l3;
    if (n + 1 < depth_) y = f_.evaluate(y);
  }
  // Contracting coordinate: -sum_{n=1..N} lambda_1^{n-1} p_1(f^{-n} x).
  y = x;
  double w1 = 1.0;
  for (int n = 1; n <= depth_; ++n) {
    y = f_.inverse(y);
    u.x -= w1 * dot(s.dual[0], f_.displacement(y));
    w1 *= l1;
  }
  return u;
}

Vec3 Conjugator::correction(const TorusPoint& x) const {
  return f_.base().splitting().from_coordinates(correction_coordinates(x));
}

LiftPoint Conjugator::phi_lift(const LiftPoint& x) const {
  if (f_.is_linear()) return x;
  return LiftPoint{x.r + correction(wrap(x))};
}

TorusPoint Conjugator::phi(const TorusPoint& x) const {
  if (f_.is_linear()) return x;
  return wrap(phi_lift(lift(x)));
}

double Conjugator::residual(const TorusPoint& x) const {
  return torus_distance(phi(f_.evaluate(x)), f_.base().apply(phi(x)));
}

TorusPoint locate_preimage(const Conjugator& c, const TorusPoint& z, double tolerance,
                           int max_iter) {
  if (!(tolerance > 0.0)) tolerance = std::max(c.total_tail(), 1e-12);
  LiftPoint x = lift(z);
  for (int it = 0; it < max_iter; ++it) {
    const Vec3 miss = torus_displacement(c.phi(wrap(x)), z);
    if (norm(miss) <= tolerance) return wrap(x);
    x.r += miss;
  }
  throw Error(ErrorCode::NoConvergence, "preimage iteration did not converge");
}

FiberReport fiber_diameter(const Conjugator& c, const TorusPoint& z, const LeafSegment& leaf,
                           double delta) {
  if (leaf.points.empty()) throw Error(ErrorCode::InvalidArgument, "empty leaf");
  if (!(delta >= 0.0)) throw Error(ErrorCode::InvalidArgument, "delta must be non-negative");
  const double threshold = delta + c.total_tail();
  FiberReport rep;
  rep.closest = std::numeric_limits<double>::infinity();
  std::size_t best_lo = 0, best_hi = 0, best_len = 0;
  std::size_t run_lo = 0, run_len = 0;
  for (std::size_t i = 0; i < leaf.points.size(); ++i) {
    const double d = torus_distance(c.phi(wrap(leaf.points[i])), z);
    rep.closest = std::min(rep.closest, d);
    if (d <= threshold) {
      if (run_len == 0) run_lo = i;
      ++run_len;
      if (run_len > best_len) {
        best_len = run_len;
        best_lo = run_lo;
        best_hi = i;
      }
    } else {
      run_len = 0;
    }
  }
  if (best_len == 0)
    throw Error(ErrorCode::InvalidArgument, "no leaf vertex maps within delta of z");
  if (best_lo == 0 || best_hi + 1 == leaf.points.size())
    throw Error(ErrorCode::LeafTooShort, "fiber reaches the end of the sampled leaf");
  rep.run_points = best_len;
  rep.diameter = best_len > 1 ? leaf.arclength[best_hi] - leaf.arclength[best_lo] : 0.0;
  return rep;
}

double center_image_check(const Conjugator& c, const LeafSegment& leaf) {
  if (leaf.points.empty()) return 0.0;
  const Vec3 e = c.model().base().splitting().eigenvectors[1];
  std::vector<Vec3> q;
  q.reserve(leaf.points.size());
  Vec3 mean{};
  for (const auto& y : leaf.points) {
    const Vec3 img = c.phi_lift(y).r;
    q.push_back(img - dot(img, e) * e);
    mean += q.back();
  }
  mean = mean * (1.0 / static_cast<double>(q.size()));
  double worst = 0.0;
  for (const auto& v : q) worst = std::max(worst, norm(v - mean));
  return worst;
}

}  // namespace phlab
