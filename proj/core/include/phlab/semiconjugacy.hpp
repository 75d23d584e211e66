#pragma once

// The semiconjugacy phi = id + u with phi o f = A o phi, evaluated as a
// truncated series in the eigen-coordinates of A with explicit tail bounds.

#include <array>
#include <cstddef>
#include <vector>

#include "phlab/foliation.hpp"
#include "phlab/map_models.hpp"

namespace phlab {

class Conjugator {
 public:
  /// Fixed truncation depth N >= 1.
  Conjugator(DAMap f, int depth);
  /// Smallest depth whose total tail bound is <= tolerance (capped at max_depth).
  static Conjugator with_tolerance(DAMap f, double tolerance, int max_depth = 400);

  const DAMap& model() const { return f_; }
  int depth() const { return depth_; }
  /// sup |p| for the periodic displacement p = lift(f) - A.
  double displacement_sup() const { return p_sup_; }
  /// Per eigen-coordinate truncation bounds (stable, center, unstable order).
  const std::array<double, 3>& tail_bounds() const { return tails_; }
  double total_tail() const { return tails_[0] + tails_[1] + tails_[2]; }
  /// Geometric bound on sup |u| from summing the full series term by term.
  double analytic_bound() const;

  /// Eigen-coordinates of the correction u(x).
  Vec3 correction_coordinates(const TorusPoint& x) const;
  Vec3 correction(const TorusPoint& x) const;
  LiftPoint phi_lift(const LiftPoint& x) const;
  TorusPoint phi(const TorusPoint& x) const;
  /// |phi(f(x)) - A(phi(x))| measured on the torus.
  double residual(const TorusPoint& x) const;

 private:
  DAMap f_;
  int depth_;
  double p_sup_;
  std::array<double, 3> tails_{};
};

/// Tail bounds for depth N: expanding coordinates |p| |d_i| lambda_i^{-(N+1)} /
/// (1 - 1/lambda_i), contracting coordinate |p| |d_1| lambda_1^N / (1 - lambda_1),
/// where d_i are the dual rows of the eigenbasis.
std::array<double, 3> semiconjugacy_tail_bounds(const DAMap& f, int depth);

/// Solves phi(x) = z by the iteration x <- x + (z - phi(x)). The truncated
/// series amplifies rounding in the forward orbit, so phi itself is only good
/// to about 1e-9; a tolerance <= 0 means the conjugator's total tail bound.
/// Throws NoConvergence when the iteration stalls above the tolerance.
TorusPoint locate_preimage(const Conjugator& c, const TorusPoint& z, double tolerance = 0.0,
                           int max_iter = 200);

struct FiberReport {
  double diameter = 0.0;     // arclength of the longest run of vertices in the fiber
  std::size_t run_points = 0;
  double closest = 0.0;      // min over vertices of |phi(y) - z|
};

/// Arclength of the longest run of consecutive leaf vertices y with
/// |phi(y) - z| <= delta + total tail. Zero when the run has a single vertex.
/// Throws LeafTooShort when the run reaches an end of the polyline and
/// InvalidArgument when no vertex qualifies.
FiberReport fiber_diameter(const Conjugator& c, const TorusPoint& z, const LeafSegment& leaf,
                           double delta);

/// Max distance of phi(leaf vertices), projected orthogonally to the center
/// eigendirection of A, from their mean: zero for a piece of a center line.
double center_image_check(const Conjugator& c, const LeafSegment& leaf);

}  // namespace phlab
