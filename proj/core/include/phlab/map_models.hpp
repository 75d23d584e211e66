#pragma once

// Derived-from-Anosov maps x -> A x + s * rho(dist(x, q) / r0) * v (mod 1) with
// the fixed C^2 bump rho(t) = (1 - t^2)^3, plus cone-field verification and
// invariant-bundle computation by power iteration.

#include <cstddef>
#include <string>
#include <vector>

#include "phlab/linalg.hpp"
#include "phlab/torus.hpp"

namespace phlab {

struct BumpParameters {
  double amplitude = 0.0;  // s
  TorusPoint center;       // q
  double radius = 0.2;     // r0 in (0, 0.5)
  Vec3 direction{0, 1, 0}; // v, normalized on construction
};

class DAMap {
 public:
  /// Validates r0 in (0, 0.5), |v| > 0 and the diffeomorphism bound
  /// s * |A^{-1} v| * sup|grad bump| < 1; throws InvalidModel otherwise.
  DAMap(IntegerAutomorphism base, const BumpParameters& bump);

  /// The unperturbed linear model (s = 0).
  static DAMap linear(IntegerAutomorphism base);

  const IntegerAutomorphism& base() const { return base_; }
  const BumpParameters& bump() const { return bump_; }
  bool is_linear() const { return bump_.amplitude == 0.0; }

  /// Bump value rho(dist(x, q) / r0) in [0, 1].
  double bump_value(const TorusPoint& x) const;
  /// Gradient of the bump with respect to x.
  Vec3 bump_gradient(const TorusPoint& x) const;
  /// Periodic displacement p(x) = lift(f)(x) - A x = s * bump(x) * v.
  Vec3 displacement(const TorusPoint& x) const;
  /// Sup over x of |p(x)|, attained at the bump center.
  double displacement_sup() const { return std::abs(bump_.amplitude); }

  TorusPoint evaluate(const TorusPoint& p) const;
  LiftPoint evaluate_lift(const LiftPoint& p) const;

  /// Df(x) = A + s v (grad bump)^T.
  Mat3 derivative(const TorusPoint& p) const;
  double jacobian(const TorusPoint& p) const { return determinant(derivative(p)); }

  /// Newton iteration on the lift seeded at A^{-1} p. Throws NoConvergence.
  LiftPoint inverse_lift(const LiftPoint& p, int max_iter = 50) const;
  TorusPoint inverse(const TorusPoint& p, int max_iter = 50) const;

  /// s * |A^{-1} v| * sup|grad bump|; construction requires < 1.
  double diffeomorphism_bound() const { return diffeo_bound_; }
  /// sup over the torus of |grad bump| = 96 / (25 sqrt(5) r0).
  double bump_gradient_sup() const;

 private:
  IntegerAutomorphism base_;
  BumpParameters bump_;
  Mat3 a_;
  Mat3 a_inv_;
  double diffeo_bound_ = 0.0;
};

/// Half-angle apertures (radians) of the cones around the stable, center and
/// unstable eigendirections of the linear part. Angles are measured in the
/// eigen-coordinates of A.
struct ConeField {
  double stable = 0.3;
  double center = 0.3;
  double unstable = 0.3;
};

struct VerificationReport {
  bool passed = true;
  std::size_t points = 0;
  /// 1 - (worst image aperture / target aperture); positive means strict
  /// invariance. uu and cu cones are checked under Df, ss and cs under Df^{-1}.
  double unstable_margin = 1.0;
  double stable_margin = 1.0;
  double center_unstable_margin = 1.0;
  double center_stable_margin = 1.0;
  /// Worst domination ratios max|Df^N v^s| / min|Df^N v^c| and
  /// max|Df^N v^c| / min|Df^N v^u| over cone vectors.
  double stable_center_ratio = 0.0;
  double center_unstable_ratio = 0.0;
  /// Smallest iterate N at which the ratios hold everywhere (0 if none did).
  int domination_iterate = 0;
  double min_jacobian = 0.0;
  double max_jacobian = 0.0;
  std::vector<std::string> failures;
};

struct ConeCheckOptions {
  double domination_ratio = 0.5;
  int max_iterate = 4;
  int boundary_samples = 96;
};

/// Samples the n^3 grid and checks strict cone invariance and domination.
/// Failures are recorded in the report; nothing is thrown.
VerificationReport verify_cones(const DAMap& f, const ConeField& cones, int n,
                                const ConeCheckOptions& options = {});

struct BundleFrame {
  Vec3 stable;
  Vec3 center;
  Vec3 unstable;
  /// Angle between the depth-n and depth-(n-1) estimates of each direction.
  double stable_residual = 0.0;
  double center_residual = 0.0;
  double unstable_residual = 0.0;
  double determinant = 0.0;

  double residual() const;
};

struct BundleOptions {
  int iterations = 60;
  double tolerance = 1e-8;
  double min_determinant = 1e-3;
};

/// Invariant splitting at p. E^uu by forward power iteration along the
/// backward orbit, E^ss by backward iteration along the forward orbit, E^c as
/// the intersection of the center-stable and center-unstable planes. Signs are
/// fixed so each direction has positive component along its eigenvector of A.
/// Throws BundleNoConvergence if the residual exceeds the tolerance or the
/// frame degenerates.
BundleFrame bundle_at(const DAMap& f, const TorusPoint& p, const BundleOptions& options = {});

/// Invariant directions along a forward orbit segment, computed once for the
/// whole orbit: forward propagation of E^uu / E^cu from the first point and
/// backward propagation of E^ss / E^cs from the last. `margin` points at each
/// end are used for convergence and not returned.
struct OrbitBundles {
  std::vector<TorusPoint> points;
  std::vector<Vec3> stable;
  std::vector<Vec3> center;
  std::vector<Vec3> unstable;
};

OrbitBundles orbit_bundles(const DAMap& f, const TorusPoint& start, std::size_t length,
                           std::size_t margin = 60);

}  // namespace phlab

namespace phlab {

/// Shipped reference configuration: A_ref with s = 0.05, r0 = 0.2, bump
/// centered at (0.5, 0.5, 0.5) pushing along the center eigendirection.
DAMap reference_da_map(double amplitude = 0.05);

/// Cone apertures used with the reference DA configuration.
ConeField reference_da_cones();

}  // namespace phlab
