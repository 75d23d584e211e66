#include <cmath>

#include "doctest.h"
#include "phlab/error.hpp"
#include "phlab/map_models.hpp"
#include "phlab/random.hpp"

using namespace phlab;

namespace {

TorusPoint random_point(Rng& rng) { return TorusPoint(rng.uniform(), rng.uniform(), rng.uniform()); }

// Points inside the bump support, where the perturbation is active.
TorusPoint near_bump(Rng& rng, double radius) {
  return TorusPoint(0.5 + rng.uniform(-radius, radius), 0.5 + rng.uniform(-radius, radius),
                    0.5 + rng.uniform(-radius, radius));
}

}  // namespace

TEST_CASE("zero amplitude reproduces the linear map bit for bit") {
  const DAMap f = reference_da_map(0.0);
  const IntegerAutomorphism& a = f.base();
  Rng rng(3);
  for (int i = 0; i < 2000; ++i) {
    const TorusPoint p = random_point(rng);
    CHECK(f.evaluate(p) == a.apply(p));
    CHECK(f.derivative(p) == a.real_matrix());
  }
}

TEST_CASE("outside the support the derivative is A") {
  const DAMap f = reference_da_map();
  const Mat3 a = f.base().real_matrix();
  CHECK(f.derivative(TorusPoint(0.0, 0.0, 0.0)) == a);
  CHECK(f.derivative(TorusPoint(0.5, 0.5, 0.75)) == a);
  CHECK(f.bump_value(TorusPoint(0.5, 0.5, 0.5)) == 1.0);
  CHECK(f.displacement_sup() == 0.05);
}

TEST_CASE("derivative matches central finite differences") {
  const DAMap f = reference_da_map();
  Rng rng(5);
  const double h = 1e-5;
  for (int i = 0; i < 300; ++i) {
    const TorusPoint p = near_bump(rng, 0.18);
    const Mat3 df = f.derivative(p);
    for (int j = 0; j < 3; ++j) {
      Vec3 e{};
      e[j] = h;
      const Vec3 plus = f.evaluate_lift(LiftPoint{p.coords() + e}).r;
      const Vec3 minus = f.evaluate_lift(LiftPoint{p.coords() - e}).r;
      const Vec3 fd = (plus - minus) * (0.5 / h);
      const Vec3 col = df.col(j);
      CHECK(norm(fd - col) <= 1e-6 * std::max(1.0, norm(col)));
    }
  }
}

TEST_CASE("inverse round trip") {
  const DAMap f = reference_da_map();
  Rng rng(9);
  double worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const TorusPoint p = i % 2 ? random_point(rng) : near_bump(rng, 0.2);
    worst = std::max(worst, torus_distance(f.inverse(f.evaluate(p)), p));
  }
  CHECK(worst <= 1e-12);
}

TEST_CASE("construction rejects invalid parameters") {
  const auto code = [](double s, double r0) {
    BumpParameters b;
    b.amplitude = s;
    b.radius = r0;
    try {
      DAMap f(reference_automorphism(), b);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::InvalidArgument;
  };
  // s * |A^-1 v| * sup|grad| = 0.276 at s = 0.05; 0.2 pushes it past 1.
  CHECK(code(0.2, 0.2) == ErrorCode::InvalidModel);
  CHECK(code(0.05, 0.6) == ErrorCode::InvalidModel);
  CHECK(code(0.05, 0.0) == ErrorCode::InvalidModel);
  CHECK(reference_da_map().diffeomorphism_bound() < 1.0);
}

TEST_CASE("cone verification") {
  SUBCASE("linear model") {
    const auto r = verify_cones(DAMap::linear(reference_automorphism()), ConeField{}, 8);
    CHECK(r.passed);
    CHECK(r.domination_iterate == 1);
    CHECK(r.min_jacobian == doctest::Approx(1.0));
  }
  SUBCASE("reference DA map on a 32^3 grid") {
    const auto r = verify_cones(reference_da_map(), reference_da_cones(), 32);
    CHECK(r.passed);
    CHECK(r.points == 32768u);
    CHECK(r.unstable_margin > 0.0);
    CHECK(r.stable_margin > 0.0);
    CHECK(r.stable_center_ratio <= 0.5);
    CHECK(r.center_unstable_ratio <= 0.5);
    CHECK(r.min_jacobian > 0.0);
  }
  SUBCASE("degenerate aperture is reported, not thrown") {
    const auto r = verify_cones(reference_da_map(), ConeField{0.3, 0.0, 0.3}, 4);
    CHECK_FALSE(r.passed);
    REQUIRE(r.failures.size() == 1);
    CHECK(r.failures[0].find("center") != std::string::npos);
  }
}

TEST_CASE("bundles of the linear model are the eigenvectors") {
  const DAMap f = DAMap::linear(reference_automorphism());
  const auto& e = f.base().splitting().eigenvectors;
  Rng rng(13);
  for (int i = 0; i < 20; ++i) {
    const BundleFrame b = bundle_at(f, random_point(rng));
    CHECK(norm(b.stable - e[0]) < 1e-10);
    CHECK(norm(b.center - e[1]) < 1e-10);
    CHECK(norm(b.unstable - e[2]) < 1e-10);
  }
}

TEST_CASE("bundles of the reference DA map are invariant and dominated") {
  const DAMap f = reference_da_map();
  Rng rng(17);
  for (int i = 0; i < 40; ++i) {
    const TorusPoint p = i % 2 ? random_point(rng) : near_bump(rng, 0.2);
    const BundleFrame b = bundle_at(f, p);
    CHECK(b.residual() <= 1e-8);
    CHECK(std::abs(b.determinant) >= 0.1);

    const Mat3 df = f.derivative(p);
    const BundleFrame img = bundle_at(f, f.evaluate(p));
    CHECK(line_angle(df * b.stable, img.stable) <= 1e-6);
    CHECK(line_angle(df * b.center, img.center) <= 1e-6);
    CHECK(line_angle(df * b.unstable, img.unstable) <= 1e-6);

    const double rs = norm(df * b.stable), rc = norm(df * b.center), ru = norm(df * b.unstable);
    CHECK(rs < 1.0);
    CHECK(rs < rc);
    CHECK(rc < ru);
  }
}

TEST_CASE("orbit bundles agree with pointwise bundles") {
  const DAMap f = reference_da_map();
  const TorusPoint start(0.31, 0.47, 0.52);
  const OrbitBundles ob = orbit_bundles(f, start, 50);
  REQUIRE(ob.points.size() == 50);
  for (std::size_t k = 0; k < ob.points.size(); k += 7) {
    const BundleFrame b = bundle_at(f, ob.points[k]);
    CHECK(line_angle(ob.center[k], b.center) < 1e-8);
    CHECK(line_angle(ob.unstable[k], b.unstable) < 1e-8);
    CHECK(line_angle(ob.stable[k], b.stable) < 1e-8);
  }
}
