#include "phlab/linalg.hpp"

#include <algorithm>
#include <numbers>

namespace phlab {

double spectral_norm(const Mat3& m) {
  // Largest eigenvalue of the symmetric matrix S = m^T m, closed form for 3x3.
  const Mat3 s = transpose(m) * m;
  const double p1 = s(0, 1) * s(0, 1) + s(0, 2) * s(0, 2) + s(1, 2) * s(1, 2);
  const double q = (s(0, 0) + s(1, 1) + s(2, 2)) / 3.0;
  if (p1 == 0.0) return std::sqrt(std::max({s(0, 0), s(1, 1), s(2, 2)}));
  const double p2 = (s(0, 0) - q) * (s(0, 0) - q) + (s(1, 1) - q) * (s(1, 1) - q) +
                    (s(2, 2) - q) * (s(2, 2) - q) + 2.0 * p1;
  const double p = std::sqrt(p2 / 6.0);
  Mat3 b = s;
  for (std::size_t i = 0; i < 3; ++i) b(i, i) -= q;
  for (auto& v : b.a) v /= p;
  const double r = std::clamp(determinant(b) / 2.0, -1.0, 1.0);
  const double phi = std::acos(r) / 3.0;
  const double top = q + 2.0 * p * std::cos(phi);
  return std::sqrt(std::max(top, 0.0));
}

}  // namespace phlab
