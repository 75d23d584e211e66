#include <cmath>

#include "doctest.h"
#include "phlab/ergodic_stats.hpp"
#include "phlab/error.hpp"
#include "phlab/random.hpp"
#include "support/oracles.hpp"

using namespace phlab;

namespace {

// log of the roots of x^3 - 5x^2 + 6x - 1, found by bisection.
std::array<double, 3> reference_logs() {
  const auto r = oracle::real_roots({1.0, -5.0, 6.0, -1.0}, 0.0, 4.0);
  REQUIRE(r.size() == 3);
  return {std::log(r[2]), std::log(r[1]), std::log(r[0])};
}

}  // namespace

TEST_CASE("linear spectrum matches the eigenvalue logs") {
  const auto logs = reference_logs();
  const DAMap a = DAMap::linear(reference_automorphism());
  const ExponentReport rep = lyapunov_spectrum(a, 100000, 7);
  for (int i = 0; i < 3; ++i) CHECK(std::abs(rep.exponents[i] - logs[i]) <= 1e-3);
  CHECK(std::abs(rep.sum()) <= 1e-3);
  CHECK(rep.seed == 7);
  CHECK(rep.length == 100000);
}

TEST_CASE("linear spectrum does not depend on the start") {
  const DAMap a = DAMap::linear(reference_automorphism());
  const auto batch = lyapunov_batch(a, 4, 20000, 11);
  for (const auto& r : batch)
    for (int i = 0; i < 3; ++i) CHECK(std::abs(r.exponents[i] - batch[0].exponents[i]) <= 1e-6);
}

TEST_CASE("batches are identical across worker counts") {
  const DAMap f = reference_da_map();
  const auto one = lyapunov_batch(f, 6, 2000, 3, 1);
  const auto four = lyapunov_batch(f, 6, 2000, 3, 4);
  for (std::size_t k = 0; k < one.size(); ++k) {
    CHECK(one[k].exponents == four[k].exponents);
    CHECK(one[k].start == four[k].start);
  }
}

TEST_CASE("short orbits are rejected") {
  CHECK_THROWS_AS(lyapunov_spectrum(reference_da_map(), 999, 1), Error);
}

TEST_CASE("DA spectrum: ordering, volume and the center cross-check") {
  const DAMap f = reference_da_map();
  const ExponentReport rep = lyapunov_spectrum(f, 50000, 5);
  CHECK(rep.exponents[0] > rep.exponents[1]);
  CHECK(rep.exponents[1] > rep.exponents[2]);
  CHECK(std::abs(rep.sum() - rep.log_jacobian) <= 2.0 * rep.half_width + 1e-12);
  // The bump is not volume preserving, but the log-Jacobian stays small.
  CHECK(std::abs(rep.log_jacobian) < 0.05);
  const CenterExponentReport c = center_exponent(f, rep.start, 50000);
  CHECK(std::abs(c.value - rep.exponents[1]) <= 2.0 * (rep.half_width + c.half_width));
}

TEST_CASE("center exponent") {
  SUBCASE("linear") {
    const DAMap a = DAMap::linear(reference_automorphism());
    const double target = reference_logs()[1];
    CHECK(std::abs(center_exponent(a, TorusPoint(0.1, 0.2, 0.3), 1000).value - target) <= 1e-4);
  }
  SUBCASE("two random starts agree") {
    const DAMap f = reference_da_map();
    const auto c1 = center_exponent(f, TorusPoint(0.12, 0.77, 0.31), 40000);
    const auto c2 = center_exponent(f, TorusPoint(0.91, 0.05, 0.63), 40000);
    CHECK(std::abs(c1.value - c2.value) <= 2.0 * (c1.half_width + c2.half_width) + 2e-3);
  }
}

TEST_CASE("birkhoff averages and orbit measures") {
  const DAMap a = DAMap::linear(reference_automorphism());
  const double mean_x =
      birkhoff_average(a, [](const TorusPoint& p) { return p.x(); }, TorusPoint(0.3, 0.1, 0.7), 100000);
  CHECK(std::abs(mean_x - 0.5) < 0.01);
  const EmpiricalMeasure m = orbit_measure(a, TorusPoint(0.3, 0.1, 0.7), 1000, 10);
  CHECK(m.points.size() == 1000);
  CHECK(m.total_weight() == doctest::Approx(1.0));
}

TEST_CASE("pliss blocks: worked examples") {
  const auto constant = pliss_blocks(std::vector<double>(20, -0.5), 0.5);
  CHECK(constant.indices.size() == 20);
  CHECK(constant.density == 1.0);

  const auto spike = pliss_blocks({2, 0, 0, 0}, 1.0);
  CHECK(spike.indices == std::vector<std::size_t>{1, 2, 3});

  const auto none = pliss_blocks({1, 1, 1}, 1.0);
  CHECK(none.indices.empty());

  const auto empty = pliss_blocks({}, 1.0);
  CHECK(empty.density == 0.0);
}

TEST_CASE("pliss blocks: right-censoring marks the tail") {
  const auto rep = pliss_blocks(std::vector<double>(100, 0.0), 1.0);
  CHECK(rep.censored_from == 90);
  CHECK(rep.censored_count() == 10);
  const auto custom = pliss_blocks(std::vector<double>(100, 0.0), 1.0, 30);
  CHECK(custom.censored_count() == 30);
}

TEST_CASE("pliss blocks agree with brute force on all short ternary series") {
  for (int len = 0; len <= 8; ++len) {
    int total = 1;
    for (int i = 0; i < len; ++i) total *= 3;
    for (int code = 0; code < total; ++code) {
      std::vector<double> a(len);
      int c = code;
      for (int i = 0; i < len; ++i, c /= 3) a[i] = static_cast<double>(c % 3 - 1);
      REQUIRE(pliss_blocks(a, 0.5).indices == oracle::pliss_brute_force(a, 0.5));
    }
  }
}

TEST_CASE("pliss blocks on random real series") {
  Rng rng(9);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> a(50);
    for (auto& v : a) v = rng.uniform(-1.0, 1.0);
    const double tau = rng.uniform(-0.3, 0.3);
    const auto rep = pliss_blocks(a, tau);
    CHECK(rep.indices == oracle::pliss_brute_force(a, tau));
  }
}

TEST_CASE("pliss set fraction") {
  const DAMap a = DAMap::linear(reference_automorphism());
  CHECK(pliss_set_fraction(a, TorusPoint(0.3, 0.2, 0.1), 2000, 0.01).density == 1.0);

  const DAMap f = reference_da_map();
  double prev = 0.0;
  for (double eps : {0.01, 0.05, 0.1}) {
    const auto rep = pliss_set_fraction(f, TorusPoint(0.3, 0.2, 0.1), 20000, eps);
    CHECK(rep.density > 0.0);
    CHECK(rep.density >= prev);
    CHECK(rep.uncensored_density <= rep.density);
    prev = rep.density;
  }
}
