#include <chrono>
#include <cmath>
#include <set>
#include <tuple>

#include "doctest.h"
#include "phlab/error.hpp"
#include "phlab/random.hpp"
#include "phlab/torus.hpp"
#include "support/oracles.hpp"

using namespace phlab;

namespace {

const IntMat3 kRef{1, -1, 0, -1, 2, -1, 0, -1, 2};

ErrorCode split_error(const IntMat3& m) {
  try {
    spectral_split(m);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST_CASE("wrap reduces coordinates into [0,1)") {
  const TorusPoint o = wrap(LiftPoint{{0.0, 0.0, 0.0}});
  CHECK(o.coords() == Vec3{0.0, 0.0, 0.0});

  const TorusPoint p = wrap(LiftPoint{{1.25, -0.5, 3.0}});
  CHECK(p.x() == 0.25);
  CHECK(p.y() == 0.5);
  CHECK(p.z() == 0.0);

  // -1e-16 mod 1 is 1 - 1e-16 exactly; the seam rule sends it to 0.
  const TorusPoint q = wrap(LiftPoint{{-1e-16, 0.3, 0.7}});
  CHECK(q.x() == 0.0);
  CHECK(q.y() == 0.3);
  CHECK(q.z() == 0.7);

  Rng rng(7);
  for (int i = 0; i < 1000; ++i) {
    const Vec3 v{rng.uniform(-50, 50), rng.uniform(-50, 50), rng.uniform(-50, 50)};
    const TorusPoint t(v);
    for (int k = 0; k < 3; ++k) {
      CHECK(t.coords()[k] >= 0.0);
      CHECK(t.coords()[k] < 1.0);
    }
    // wrap(lift(p)) = p exactly.
    CHECK(wrap(lift(t)) == t);
  }
}

TEST_CASE("torus distance uses the nearest translate") {
  CHECK(torus_distance(TorusPoint(0.05, 0.5, 0.5), TorusPoint(0.95, 0.5, 0.5)) ==
        doctest::Approx(0.1).epsilon(1e-12));
  CHECK(torus_distance(TorusPoint(0.0, 0.0, 0.0), TorusPoint(0.5, 0.5, 0.5)) ==
        doctest::Approx(std::sqrt(0.75)));
}

TEST_CASE("spectral split of the reference matrix matches a bisection oracle") {
  const auto roots = oracle::real_roots({1.0, -5.0, 6.0, -1.0}, -1.0, 6.0);
  REQUIRE(roots.size() == 3);

  const auto t0 = std::chrono::steady_clock::now();
  const HyperbolicSplitting s = spectral_split(kRef);
  const double ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  CHECK(ms < 1.0);

  for (int i = 0; i < 3; ++i) CHECK(std::abs(s.eigenvalues[i] - roots[i]) < 1e-10);
  CHECK(s.eigenvalues[0] == doctest::Approx(0.19806).epsilon(1e-5));
  CHECK(s.eigenvalues[1] == doctest::Approx(1.55496).epsilon(1e-5));
  CHECK(s.eigenvalues[2] == doctest::Approx(3.24698).epsilon(1e-5));

  const IntegerAutomorphism a(kRef);
  const Mat3 m = a.real_matrix();
  for (int i = 0; i < 3; ++i) {
    const Vec3 e = s.eigenvectors[i];
    CHECK(norm(e) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(norm(m * e - s.eigenvalues[i] * e) < 1e-12);
    for (int j = 0; j < 3; ++j)
      CHECK(std::abs(dot(s.dual[i], s.eigenvectors[j]) - (i == j ? 1.0 : 0.0)) < 1e-12);
  }
  const double prod = s.eigenvalues[0] * s.eigenvalues[1] * s.eigenvalues[2];
  CHECK(std::abs(prod - 1.0) < 1e-9);
}

TEST_CASE("spectral split rejects non-hyperbolic and wrong-signature matrices") {
  CHECK(split_error(IntMat3{1, 0, 0, 0, 1, 0, 0, 0, 1}) == ErrorCode::NotHyperbolic);
  // Spectrum ~ (0.308, 0.643, 5.049): two contracting directions.
  const auto roots = oracle::real_roots({1.0, -6.0, 5.0, -1.0}, -1.0, 7.0);
  REQUIRE(roots.size() == 3);
  CHECK(roots[0] == doctest::Approx(0.308).epsilon(1e-3));
  CHECK(roots[1] == doctest::Approx(0.643).epsilon(1e-3));
  CHECK(roots[2] == doctest::Approx(5.049).epsilon(1e-3));
  CHECK(split_error(IntMat3{3, 2, 1, 2, 2, 1, 1, 1, 1}) == ErrorCode::WrongSignature);
  // det = 2 is not an automorphism.
  CHECK(split_error(IntMat3{2, 0, 0, 0, 1, 0, 0, 0, 1}) == ErrorCode::InvalidModel);
  // Rotation block has complex eigenvalues.
  CHECK(split_error(IntMat3{0, -1, 0, 1, 0, 0, 0, 0, 1}) == ErrorCode::NotHyperbolic);
}

TEST_CASE("eigenvalues agree with the oracle across a family of hyperbolic matrices") {
  // Symmetric tridiagonal and companion-style matrices with det 1.
  const std::vector<IntMat3> family{
      kRef,
      IntMat3{2, 1, 0, 1, 2, 1, 0, 1, 1},
      IntMat3{0, 0, 1, 1, 0, -4, 0, 1, 5},   // companion of x^3 - 5x^2 + 4x - 1
      IntMat3{0, 0, 1, 1, 0, -7, 0, 1, 6},   // companion of x^3 - 6x^2 + 7x - 1
  };
  for (const auto& m : family) {
    HyperbolicSplitting s;
    try {
      s = spectral_split(m);
    } catch (const Error&) {
      continue;  // signature not of our type; covered by the rejection test
    }
    const auto c = characteristic_polynomial(m);
    const auto roots = oracle::real_roots({1.0, c[2], c[1], c[0]}, -20.0, 20.0);
    REQUIRE(roots.size() == 3);
    for (int i = 0; i < 3; ++i) CHECK(std::abs(s.eigenvalues[i] - roots[i]) < 1e-10);
    const double prod = s.eigenvalues[0] * s.eigenvalues[1] * s.eigenvalues[2];
    CHECK(std::abs(std::abs(prod) - std::abs(static_cast<double>(determinant(m)))) < 1e-9);
  }
}

TEST_CASE("automorphism application on torus and lift") {
  const IntegerAutomorphism a = reference_automorphism();
  CHECK(a.apply(TorusPoint(0, 0, 0)) == TorusPoint(0, 0, 0));
  CHECK(a.apply_lift(LiftPoint{{1, 0, 0}}).r == Vec3{1, -1, 0});

  // Inverse matrix really is the inverse.
  const Mat3 prod = a.real_matrix() * a.real_inverse();
  CHECK(prod == Mat3::identity());

  Rng rng(11);
  for (int i = 0; i < 1000; ++i) {
    const TorusPoint p(rng.uniform(), rng.uniform(), rng.uniform());
    CHECK(wrap(a.apply_lift(lift(p))) == a.apply(p));
    // Any representative lift gives the same torus point up to rounding.
    const Vec3 shift{std::floor(rng.uniform(-5, 5)), std::floor(rng.uniform(-5, 5)),
                     std::floor(rng.uniform(-5, 5))};
    const TorusPoint other = wrap(a.apply_lift(LiftPoint{p.coords() + shift}));
    CHECK(torus_distance(other, a.apply(p)) < 1e-12);
    CHECK(torus_distance(a.apply_inverse(a.apply(p)), p) < 1e-12);
  }
}

TEST_CASE("automorphism is a bijection of dyadic lattices") {
  const IntegerAutomorphism a = reference_automorphism();
  for (int k = 0; k <= 4; ++k) {
    const int q = 1 << k;
    std::set<std::tuple<int, int, int>> image;
    for (int i = 0; i < q; ++i)
      for (int j = 0; j < q; ++j)
        for (int l = 0; l < q; ++l) {
          const TorusPoint p(static_cast<double>(i) / q, static_cast<double>(j) / q,
                             static_cast<double>(l) / q);
          const TorusPoint r = a.apply(p);
          const Vec3 scaled = r.coords() * static_cast<double>(q);
          // Dyadic arithmetic is exact, so the image lies on the lattice exactly.
          CHECK(scaled.x == std::floor(scaled.x));
          CHECK(scaled.y == std::floor(scaled.y));
          CHECK(scaled.z == std::floor(scaled.z));
          image.emplace(static_cast<int>(scaled.x), static_cast<int>(scaled.y),
                        static_cast<int>(scaled.z));
        }
    CHECK(image.size() == static_cast<std::size_t>(q) * q * q);
  }
}
