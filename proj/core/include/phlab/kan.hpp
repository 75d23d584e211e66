#pragma once

// The skew product on the cylinder S^1 x [0, 1]
//   (theta, t) -> (3 theta + s t sin(2 pi theta) mod 1, h_theta(t)),
//   h_theta(t) = t - a t (1 - t) cos(2 pi theta),
// with two invariant boundary circles carrying competing physical measures.

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace phlab {

/// Row-major 2x2 matrix; rows are (theta, t).
using Mat2 = std::array<double, 4>;

struct CylinderPoint {
  double theta = 0.0;  // in [0, 1)
  double t = 0.0;      // in [0, 1]
};

class KanMap {
 public:
  /// No validation; see kan_validate.
  KanMap(double amplitude, double perturbation) : a_(amplitude), s_(perturbation) {}

  double amplitude() const { return a_; }
  double perturbation() const { return s_; }

  CylinderPoint evaluate(const CylinderPoint& p) const;
  double fiber(double theta, double t) const;
  /// d/dt h_theta(t) = 1 - a (1 - 2t) cos(2 pi theta)
  double fiber_derivative(double theta, double t) const;
  /// Base map restricted to a boundary (t = 0 or 1), and its lift.
  double boundary_map(int boundary, double theta) const;
  double boundary_lift(int boundary, double x) const;
  double boundary_derivative(int boundary, double theta) const;
  Mat2 derivative(const CylinderPoint& p) const;

 private:
  double a_;
  double s_;
};

/// Exact value of int_0^1 log(1 - a cos 2 pi theta) d theta.
double kan_log_integral(double a);

struct KanValidation {
  bool passed = false;
  int failed_condition = 0;  // first failing index; meaningful only when !passed
  std::string message;
  double boundary_defect = 0.0;         // (1) max |h(0)| + |h(1) - 1| over a theta grid
  double derivative_sup = 0.0;          // (2) 1 + a
  std::array<double, 2> log_integral{};  // (3) quadrature at t = 0 and t = 1
  double log_integral_exact = 0.0;
  double quadrature_error = 0.0;
  double fixed_point_multiplier = 0.0;  // (4) |h'_0(0)| = |h'_{1/2}(1)| = 1 - a
  double order_margin = 0.0;            // (4) min over a t grid of t - h_0(t) and h_{1/2}(t) - t
  double base_expansion = 0.0;          // 3 - 2 pi |s|
};

/// Checks the amplitude range (index 0), conditions (1)-(4) and boundary
/// expansion (index 5). Returns the full report when everything passes and
/// throws ConditionViolated with the first failing index otherwise.
KanValidation kan_validate(const KanMap& m);

/// Report only, never throws.
KanValidation kan_check(const KanMap& m);

struct BasinOptions {
  int grid = 32;
  int samples_per_cell = 16;
  std::size_t horizon = 100000;
  double trap = 0.02;
  std::uint64_t seed = 0;
  int workers = 1;
};

struct BasinCell {
  int bottom = 0;  // samples trapped near t = 0
  int top = 0;
  int unresolved = 0;
};

struct BasinReport {
  int grid = 0;
  std::vector<BasinCell> cells;  // row-major: index = j * grid + i, i along theta, j along t
  double both_fraction = 0.0;    // cells with samples in both basins
  double unresolved_fraction = 0.0;
  // Symmetry (theta, t) -> (theta + 1/2, 1 - t): bottom counts of a cell
  // against top counts of its mirror.
  double symmetry_z = 0.0;             // global two-count z statistic
  double symmetry_cell_pass = 0.0;     // fraction of cells with |z| <= 3
  std::size_t trapped_total = 0;

  const BasinCell& at(int i, int j) const { return cells[static_cast<std::size_t>(j * grid + i)]; }
};

BasinReport basin_classify(const KanMap& m, const BasinOptions& options = {});

enum class MeasureMethod { Orbit, Ulam };

struct BoundaryMeasureOptions {
  MeasureMethod method = MeasureMethod::Ulam;
  int cells = 1024;
  std::size_t orbit_length = 1'000'000;
  std::size_t burn_in = 1000;
  std::uint64_t seed = 0;
  double tolerance = 1e-13;  // Ulam: L1 change between sweeps
  int max_iterations = 20000;
};

struct BoundaryMeasure {
  int boundary = 0;
  MeasureMethod method = MeasureMethod::Ulam;
  std::vector<double> density;  // per cell, integrates to 1 with cell width 1/K
  double exponent = 0.0;        // int log|d_t h_theta(i)| dm
  std::size_t iterations = 0;   // Ulam sweeps or orbit length
  double last_change = 0.0;
};

/// Invariant density of the boundary circle map and the transverse exponent.
/// Ulam transitions are exact interval fractions from inverse-lift preimages.
/// Throws UlamNotConverged.
BoundaryMeasure boundary_measure(const KanMap& m, int boundary,
                                 const BoundaryMeasureOptions& options = {});

/// Birkhoff average of log|d_t h_theta(i)| along one boundary orbit: the
/// center exponent of the boundary's physical measure.
double boundary_center_exponent(const KanMap& m, int boundary, std::size_t n,
                                std::uint64_t seed = 0);

struct HolonomyMap {
  std::vector<double> theta;     // nodes on the bottom circle
  std::vector<double> image;     // pi(theta) as a lift near theta
  std::vector<double> residual;  // |pi_n - pi_{n-1}| per node
  std::vector<double> conjugacy; // |g_1(pi(theta)) - pi(g_0(theta))| per node
  int depth = 0;
  double contraction = 0.0;      // measured depth-to-depth ratio
  double contraction_bound = 0.0;

  /// Lift of pi at any theta, linear between nodes.
  double operator()(double theta) const;
  bool strictly_monotone() const;
  double max_conjugacy_residual() const;
  /// The same map read on the reflected circle: theta -> -pi(-theta).
  HolonomyMap reversed() const;
};

/// Top endpoint of the center leaf through (theta, 0), by pulling the vertical
/// segment at the depth-n forward base point back along inverse branches.
double holonomy_at(const KanMap& m, double theta, int depth);

/// Center leaf through (theta, 0) as a polyline with `points` vertices
/// uniformly spaced in t at depth n.
std::vector<CylinderPoint> center_leaf(const KanMap& m, double theta, int depth, int points = 33);

/// Holonomy on a uniform grid of `nodes` points. Throws NotContracting when
/// the base does not dominate the fiber (3 - 2 pi |s| <= 1 + a) or the
/// measured depth ratio exceeds the bound (1 + a) / (3 - 2 pi |s|) + 0.05.
HolonomyMap center_holonomy(const KanMap& m, int nodes, int depth, int workers = 1);

struct SingularityOptions {
  std::size_t samples = 1 << 20;
  int blocks = 64;
  std::uint64_t seed = 0;
  std::size_t burn_in = 1000;
};

struct SingularityReport {
  double delta = 0.0;            // |int log g_1'(pi) dm_0 - int log g_1' dm_1|
  double standard_error = 0.0;   // jackknife over blocks
  double transported = 0.0;      // int log g_1'(pi(theta)) dm_0
  double top_exponent = 0.0;     // int log g_1' dm_1
  double hypothesis = 0.0;       // |d_theta f(p_0) - d_theta f(p_1)|
  Mat2 derivative_p0{};          // at (1/2, 0)
  Mat2 derivative_p1{};          // at (1/2, 1)
  bool singular = false;         // delta > 3 standard errors
};

/// Exponent-transport statistic. m_0 samples are drawn from the bottom
/// measure (Lebesgue for theta -> 3 theta), m_1 samples from a seeded top
/// orbit. Blocks pair up for the jackknife.
SingularityReport singularity_test(const KanMap& m, const HolonomyMap& pi,
                                   const SingularityOptions& options = {});

}  // namespace phlab
