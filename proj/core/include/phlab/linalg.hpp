#pragma once

// Fixed-size 3-vectors and 3x3 matrices. Everything in the library works in
// three dimensions, so these are small value types rather than a general
// linear-algebra dependency.

#include <array>
#include <cmath>
#include <cstddef>

namespace phlab {

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  constexpr double operator[](std::size_t i) const { return i == 0 ? x : (i == 1 ? y : z); }
  constexpr double& operator[](std::size_t i) { return i == 0 ? x : (i == 1 ? y : z); }

  constexpr Vec3& operator+=(const Vec3& o) {
    x += o.x;
    y += o.y;
    z += o.z;
    return *this;
  }
  constexpr Vec3& operator-=(const Vec3& o) {
    x -= o.x;
    y -= o.y;
    z -= o.z;
    return *this;
  }
  constexpr Vec3& operator*=(double s) {
    x *= s;
    y *= s;
    z *= s;
    return *this;
  }

  friend constexpr bool operator==(const Vec3&, const Vec3&) = default;
};

constexpr Vec3 operator+(Vec3 a, const Vec3& b) { return a += b; }
constexpr Vec3 operator-(Vec3 a, const Vec3& b) { return a -= b; }
constexpr Vec3 operator-(const Vec3& a) { return {-a.x, -a.y, -a.z}; }
constexpr Vec3 operator*(double s, Vec3 a) { return a *= s; }
constexpr Vec3 operator*(Vec3 a, double s) { return a *= s; }

constexpr double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }

constexpr Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }

inline Vec3 normalized(const Vec3& a) {
  const double n = norm(a);
  return n > 0.0 ? a * (1.0 / n) : a;
}

/// Angle in [0, pi/2] between the lines spanned by a and b (sign-insensitive).
inline double line_angle(const Vec3& a, const Vec3& b) {
  const double na = norm(a);
  const double nb = norm(b);
  if (na == 0.0 || nb == 0.0) return 0.0;
  // atan2 of |a x b| and |a.b| stays accurate for nearly parallel vectors.
  return std::atan2(norm(cross(a, b)), std::abs(dot(a, b)));
}

/// Row-major 3x3 matrix.
struct Mat3 {
  std::array<double, 9> a{};

  constexpr double operator()(std::size_t i, std::size_t j) const { return a[3 * i + j]; }
  constexpr double& operator()(std::size_t i, std::size_t j) { return a[3 * i + j]; }

  constexpr Vec3 row(std::size_t i) const { return {a[3 * i], a[3 * i + 1], a[3 * i + 2]}; }
  constexpr Vec3 col(std::size_t j) const { return {a[j], a[3 + j], a[6 + j]}; }

  static constexpr Mat3 identity() { return Mat3{{1, 0, 0, 0, 1, 0, 0, 0, 1}}; }

  static constexpr Mat3 from_columns(const Vec3& c0, const Vec3& c1, const Vec3& c2) {
    return Mat3{{c0.x, c1.x, c2.x, c0.y, c1.y, c2.y, c0.z, c1.z, c2.z}};
  }
  static constexpr Mat3 from_rows(const Vec3& r0, const Vec3& r1, const Vec3& r2) {
    return Mat3{{r0.x, r0.y, r0.z, r1.x, r1.y, r1.z, r2.x, r2.y, r2.z}};
  }

  friend constexpr bool operator==(const Mat3&, const Mat3&) = default;
};

constexpr Vec3 operator*(const Mat3& m, const Vec3& v) {
  return {m(0, 0) * v.x + m(0, 1) * v.y + m(0, 2) * v.z,
          m(1, 0) * v.x + m(1, 1) * v.y + m(1, 2) * v.z,
          m(2, 0) * v.x + m(2, 1) * v.y + m(2, 2) * v.z};
}

constexpr Mat3 operator*(const Mat3& l, const Mat3& r) {
  Mat3 out;
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j)
      out(i, j) = l(i, 0) * r(0, j) + l(i, 1) * r(1, j) + l(i, 2) * r(2, j);
  return out;
}

constexpr Mat3 operator+(Mat3 l, const Mat3& r) {
  for (std::size_t k = 0; k < 9; ++k) l.a[k] += r.a[k];
  return l;
}

constexpr Mat3 transpose(const Mat3& m) {
  return Mat3{{m(0, 0), m(1, 0), m(2, 0), m(0, 1), m(1, 1), m(2, 1), m(0, 2), m(1, 2), m(2, 2)}};
}

constexpr Mat3 outer(const Vec3& u, const Vec3& v) {
  return Mat3{{u.x * v.x, u.x * v.y, u.x * v.z, u.y * v.x, u.y * v.y, u.y * v.z, u.z * v.x,
               u.z * v.y, u.z * v.z}};
}

constexpr double determinant(const Mat3& m) {
  return dot(m.row(0), cross(m.row(1), m.row(2)));
}

/// Inverse via the adjugate. Caller guarantees det != 0.
constexpr Mat3 inverse(const Mat3& m) {
  const Vec3 r0 = m.row(0), r1 = m.row(1), r2 = m.row(2);
  const Vec3 c0 = cross(r1, r2), c1 = cross(r2, r0), c2 = cross(r0, r1);
  const double inv_det = 1.0 / dot(r0, c0);
  return Mat3::from_columns(c0 * inv_det, c1 * inv_det, c2 * inv_det);
}

/// Spectral norm (largest singular value) via the largest eigenvalue of m^T m.
double spectral_norm(const Mat3& m);

}  // namespace phlab
