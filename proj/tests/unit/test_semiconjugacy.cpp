#include <cmath>

#include "doctest.h"
#include "phlab/error.hpp"
#include "phlab/random.hpp"
#include "phlab/semiconjugacy.hpp"

using namespace phlab;

namespace {

TorusPoint random_point(Rng& rng) { return TorusPoint(rng.uniform(), rng.uniform(), rng.uniform()); }

}  // namespace

TEST_CASE("phi is the identity for the linear model") {
  Rng rng(1);
  for (int depth : {1, 5, 40}) {
    const Conjugator c(reference_da_map(0.0), depth);
    CHECK(c.total_tail() == 0.0);
    for (int i = 0; i < 200; ++i) {
      const TorusPoint p = random_point(rng);
      CHECK(c.phi(p) == p);
      CHECK(c.residual(p) <= 1e-15);
    }
  }
}

TEST_CASE("tail bounds pick the truncation depth") {
  const Conjugator c = Conjugator::with_tolerance(reference_da_map(), 1e-8);
  CHECK(c.total_tail() <= 1e-8);
  const auto prev = semiconjugacy_tail_bounds(reference_da_map(), c.depth() - 1);
  CHECK(prev[0] + prev[1] + prev[2] > 1e-8);
  // The center coordinate converges slowest: lambda_2 ~ 1.555.
  CHECK(c.tail_bounds()[1] > c.tail_bounds()[2]);
  CHECK(c.tail_bounds()[1] > c.tail_bounds()[0]);
}

TEST_CASE("semiconjugacy residual is bounded by the tails") {
  const Conjugator c = Conjugator::with_tolerance(reference_da_map(), 1e-8);
  Rng rng(2);
  double worst = 0.0, sup_u = 0.0;
  for (int i = 0; i < 2000; ++i) {
    // Half the samples inside the bump where p does not vanish.
    const TorusPoint x = i % 2 ? random_point(rng)
                               : TorusPoint(0.5 + rng.uniform(-0.2, 0.2), 0.5 + rng.uniform(-0.2, 0.2),
                                            0.5 + rng.uniform(-0.2, 0.2));
    worst = std::max(worst, c.residual(x));
    sup_u = std::max(sup_u, norm(c.correction(x)));
  }
  CHECK(worst <= 1e-6);
  CHECK(worst <= 2.0 * c.total_tail());
  CHECK(sup_u > 0.0);
  CHECK(sup_u <= c.analytic_bound());
}

TEST_CASE("one more term changes phi by at most that term's bound") {
  const DAMap f = reference_da_map();
  const auto& s = f.base().splitting();
  Rng rng(3);
  for (int n : {3, 10, 20}) {
    const Conjugator a(f, n), b(f, n + 1);
    const double p = f.displacement_sup();
    const double bound1 = p * norm(s.dual[0]) * std::pow(s.eigenvalues[0], n);
    const double bound2 = p * norm(s.dual[1]) * std::pow(s.eigenvalues[1], -(n + 1));
    const double bound3 = p * norm(s.dual[2]) * std::pow(s.eigenvalues[2], -(n + 1));
    for (int i = 0; i < 50; ++i) {
      const TorusPoint x(0.5 + rng.uniform(-0.25, 0.25), 0.5 + rng.uniform(-0.25, 0.25),
                         0.5 + rng.uniform(-0.25, 0.25));
      const Vec3 d = b.correction_coordinates(x) - a.correction_coordinates(x);
      CHECK(std::abs(d.x) <= bound1 * (1 + 1e-9) + 1e-17);
      CHECK(std::abs(d.y) <= bound2 * (1 + 1e-9) + 1e-17);
      CHECK(std::abs(d.z) <= bound3 * (1 + 1e-9) + 1e-17);
    }
  }
}

TEST_CASE("phi tends to the identity linearly in the amplitude") {
  Rng rng(4);
  std::vector<TorusPoint> xs;
  for (int i = 0; i < 400; ++i)
    xs.emplace_back(0.5 + rng.uniform(-0.2, 0.2), 0.5 + rng.uniform(-0.2, 0.2),
                    0.5 + rng.uniform(-0.2, 0.2));
  std::vector<double> sups;
  for (double s : {0.05, 0.025, 0.0125}) {
    const Conjugator c = Conjugator::with_tolerance(reference_da_map(s), 1e-10);
    double sup = 0.0;
    for (const auto& x : xs) sup = std::max(sup, norm(c.correction(x)));
    sups.push_back(sup);
  }
  for (int i = 0; i + 1 < 3; ++i) {
    const double ratio = sups[i] / sups[i + 1];
    CHECK(ratio / 2.0 >= 0.5);
    CHECK(ratio / 2.0 <= 2.0);
  }
}

TEST_CASE("fiber diameters") {
  SUBCASE("points for the linear model") {
    const Conjugator c(reference_da_map(0.0), 10);
    const DAMap& f = c.model();
    Rng rng(5);
    for (int i = 0; i < 10; ++i) {
      const TorusPoint z = random_point(rng);
      const LeafSegment leaf = trace_leaf(f, lift(z), Foliation::Center, 0.2, 0.01);
      for (double delta : {0.0, 1e-6, 1e-3}) CHECK(fiber_diameter(c, z, leaf, delta).diameter == 0.0);
    }
  }
  SUBCASE("reference DA map: bounded, monotone in delta") {
    const Conjugator c = Conjugator::with_tolerance(reference_da_map(), 1e-8);
    const DAMap& f = c.model();
    Rng rng(6);
    double sup = 0.0;
    for (int i = 0; i < 20; ++i) {
      const TorusPoint z(0.5 + rng.uniform(-0.2, 0.2), 0.5 + rng.uniform(-0.2, 0.2),
                         0.5 + rng.uniform(-0.2, 0.2));
      const TorusPoint x = locate_preimage(c, z);
      CHECK(torus_distance(c.phi(x), z) <= c.total_tail());
      const LeafSegment leaf = trace_leaf(f, lift(x), Foliation::Center, 0.3, 0.002);
      double prev = 0.0;
      for (double delta : {10.0 * c.total_tail(), 1e-4, 1e-3, 4e-3}) {
        const double d = fiber_diameter(c, z, leaf, delta).diameter;
        CHECK(d >= prev);
        prev = d;
      }
      sup = std::max(sup, fiber_diameter(c, z, leaf, 10.0 * c.total_tail()).diameter);
    }
    CHECK(sup <= 0.01);
  }
  SUBCASE("a fiber running off the sampled leaf") {
    const Conjugator c(reference_da_map(0.0), 5);
    const LeafSegment leaf = trace_leaf(c.model(), LiftPoint{{0.3, 0.3, 0.3}}, Foliation::Center,
                                        0.02, 0.005);
    CHECK_THROWS_AS(fiber_diameter(c, TorusPoint(0.3, 0.3, 0.3), leaf, 0.5), Error);
    try {
      fiber_diameter(c, TorusPoint(0.3, 0.3, 0.3), leaf, 0.5);
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::LeafTooShort);
    }
  }
}

TEST_CASE("phi maps center leaves into center lines of A") {
  SUBCASE("linear") {
    const Conjugator c(reference_da_map(0.0), 5);
    const LeafSegment leaf = trace_leaf(c.model(), LiftPoint{{0.1, 0.6, 0.2}}, Foliation::Center, 2.5, 0.05);
    CHECK(center_image_check(c, leaf) <= 1e-10);
  }
  SUBCASE("reference DA map with a strong-unstable negative control") {
    const Conjugator c = Conjugator::with_tolerance(reference_da_map(), 1e-8);
    Rng rng(8);
    for (int i = 0; i < 20; ++i) {
      const LiftPoint p{{rng.uniform(), rng.uniform(), rng.uniform()}};
      const LeafSegment leaf = trace_leaf(c.model(), p, Foliation::Center, 2.5, 0.05);
      CHECK(center_image_check(c, leaf) <= 1e-4);
    }
    const LeafSegment uu = trace_leaf(c.model(), LiftPoint{{0.4, 0.5, 0.5}}, Foliation::StrongUnstable,
                                      0.5, 0.02);
    CHECK(center_image_check(c, uu) > 0.1);
  }
}
