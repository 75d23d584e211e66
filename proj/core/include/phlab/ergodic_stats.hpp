#pragma once

// Orbit statistics: Lyapunov spectra by QR re-orthonormalization, center
// exponents along invariant bundles, empirical measures and Pliss times.

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "phlab/map_models.hpp"

namespace phlab {

struct ExponentReport {
  std::array<double, 3> exponents{};  // descending
  std::size_t length = 0;
  std::uint64_t seed = 0;
  TorusPoint start;
  /// max over exponents of |estimate(N) - estimate(N/2)|
  double half_width = 0.0;
  /// Birkhoff average of log|det Df| along the same orbit.
  double log_jacobian = 0.0;

  double sum() const { return exponents[0] + exponents[1] + exponents[2]; }
};

/// Iterates the derivative cocycle from `start` for n >= 1000 steps,
/// re-orthonormalizing the frame after every step. Throws InvalidArgument for
/// shorter orbits.
ExponentReport lyapunov_spectrum(const DAMap& f, const TorusPoint& start, std::size_t n);

/// Same, with the start drawn from the seeded stream.
ExponentReport lyapunov_spectrum(const DAMap& f, std::size_t n, std::uint64_t seed);

/// One report per start; start k uses derive_seed(seed, 0, k). Output does not
/// depend on the worker count.
std::vector<ExponentReport> lyapunov_batch(const DAMap& f, std::size_t starts, std::size_t n,
                                           std::uint64_t seed, int workers = 1);

/// log |Df(x_k) c_k| for the unit center directions c_k along the orbit.
std::vector<double> center_log_multipliers(const DAMap& f, const TorusPoint& start,
                                           std::size_t n);

struct CenterExponentReport {
  double value = 0.0;
  double half_width = 0.0;  // |average over n - average over n/2|
  std::size_t length = 0;
};

/// Birkhoff average of log |Df|E^c| over n points of the orbit of `start`.
CenterExponentReport center_exponent(const DAMap& f, const TorusPoint& start, std::size_t n);

/// Birkhoff average of an arbitrary observable.
double birkhoff_average(const DAMap& f, const std::function<double(const TorusPoint&)>& obs,
                        const TorusPoint& start, std::size_t n);

/// Weighted sample list; nothing is gridded.
struct EmpiricalMeasure {
  std::vector<TorusPoint> points;
  std::vector<double> weights;

  double total_weight() const;
};

/// Equal-weight orbit tail: n points after discarding `burn_in` iterates.
EmpiricalMeasure orbit_measure(const DAMap& f, const TorusPoint& start, std::size_t n,
                               std::size_t burn_in = 1000);

struct PlissReport {
  double threshold = 0.0;
  std::vector<std::size_t> indices;  // 0-based positions where the block starts
  std::size_t series_length = 0;
  /// Indices at or beyond this position have fewer than `horizon` terms ahead
  /// and are reported as right-censored: the finite series cannot rule out a
  /// later violation.
  std::size_t censored_from = 0;
  double density = 0.0;  // indices.size() / series_length

  std::size_t censored_count() const;
};

/// Every position k with (1/m) sum_{j<m} a[k + j] < threshold for all m that
/// fit in the series. O(n) via suffix maxima of shifted prefix sums.
/// `horizon` defaults to a tenth of the series.
PlissReport pliss_blocks(const std::vector<double>& a, double threshold,
                         std::size_t horizon = 0);

struct PlissSetReport {
  double center_exponent = 0.0;
  double epsilon = 0.0;
  double density = 0.0;
  double uncensored_density = 0.0;  // Pliss times before the censoring horizon
  std::size_t length = 0;
};

/// Pliss times of the center multiplier series at threshold tau^c + epsilon,
/// where tau^c is that series' own mean.
PlissSetReport pliss_set_fraction(const DAMap& f, const TorusPoint& start, std::size_t n,
                                  double epsilon);

}  // namespace phlab
