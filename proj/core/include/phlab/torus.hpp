#pragma once

// Points on T^3 = R^3 / Z^3, their lifts, and hyperbolic integer automorphisms.

#include <array>
#include <cstdint>

#include "phlab/linalg.hpp"

namespace phlab {

/// A point of the universal cover R^3.
struct LiftPoint {
  Vec3 r;

  friend constexpr bool operator==(const LiftPoint&, const LiftPoint&) = default;
};

/// A point of T^3 with every coordinate in [0, 1).
class TorusPoint {
 public:
  constexpr TorusPoint() = default;
  /// Wraps arbitrary real coordinates onto the torus.
  TorusPoint(double x, double y, double z);
  explicit TorusPoint(const Vec3& v) : TorusPoint(v.x, v.y, v.z) {}

  const Vec3& coords() const { return c_; }
  double x() const { return c_.x; }
  double y() const { return c_.y; }
  double z() const { return c_.z; }

  friend bool operator==(const TorusPoint&, const TorusPoint&) = default;

 private:
  Vec3 c_;
};

/// Reduces one coordinate mod 1 into [0, 1). Results within 1e-15 of 1 are
/// clamped to 0 so that points on the seam have a single representative.
double wrap_coordinate(double v);

TorusPoint wrap(const LiftPoint& p);

/// The representative lift with coordinates in [0, 1).
inline LiftPoint lift(const TorusPoint& p) { return LiftPoint{p.coords()}; }

/// Shortest displacement from `from` to `to`, minimized over the 27 integer
/// translates adjacent to the fundamental domain.
Vec3 torus_displacement(const TorusPoint& from, const TorusPoint& to);

double torus_distance(const TorusPoint& a, const TorusPoint& b);

/// Row-major 3x3 integer matrix.
using IntMat3 = std::array<std::int64_t, 9>;

std::int64_t determinant(const IntMat3& m);

/// Eigen-decomposition of a hyperbolic automorphism with real spectrum
/// lambda_1 < 1 < lambda_2 < lambda_3. Index 0/1/2 = stable/center/unstable.
struct HyperbolicSplitting {
  std::array<double, 3> eigenvalues{};
  std::array<Vec3, 3> eigenvectors{};  // unit length
  std::array<Vec3, 3> dual{};          // rows d_i with <d_i, e_j> = delta_ij

  /// Coordinates of v in the eigenbasis.
  Vec3 coordinates(const Vec3& v) const {
    return {dot(dual[0], v), dot(dual[1], v), dot(dual[2], v)};
  }
  /// Inverse of coordinates().
  Vec3 from_coordinates(const Vec3& c) const {
    return c.x * eigenvectors[0] + c.y * eigenvectors[1] + c.z * eigenvectors[2];
  }
  Mat3 basis() const {
    return Mat3::from_columns(eigenvectors[0], eigenvectors[1], eigenvectors[2]);
  }
  Mat3 dual_matrix() const { return Mat3::from_rows(dual[0], dual[1], dual[2]); }
};

/// Coefficients (c0, c1, c2) of the monic characteristic polynomial
/// x^3 + c2 x^2 + c1 x + c0.
std::array<double, 3> characteristic_polynomial(const IntMat3& m);

/// Throws NotHyperbolic (eigenvalue of modulus one, repeated or complex
/// eigenvalues), WrongSignature (spectrum not of the form l1 < 1 < l2 < l3 with
/// l1 > 0) or InvalidModel (|det| != 1).
HyperbolicSplitting spectral_split(const IntMat3& m);

class IntegerAutomorphism {
 public:
  /// Validates the matrix and caches its splitting.
  explicit IntegerAutomorphism(const IntMat3& m);

  const IntMat3& matrix() const { return m_; }
  const IntMat3& inverse_matrix() const { return inv_; }
  const HyperbolicSplitting& splitting() const { return split_; }
  Mat3 real_matrix() const;
  Mat3 real_inverse() const;

  LiftPoint apply_lift(const LiftPoint& q) const;
  TorusPoint apply(const TorusPoint& p) const;
  LiftPoint apply_inverse_lift(const LiftPoint& q) const;
  TorusPoint apply_inverse(const TorusPoint& p) const;

 private:
  IntMat3 m_;
  IntMat3 inv_;
  HyperbolicSplitting split_;
};

/// The reference automorphism [[1,-1,0],[-1,2,-1],[0,-1,2]].
IntegerAutomorphism reference_automorphism();

}  // namespace phlab
