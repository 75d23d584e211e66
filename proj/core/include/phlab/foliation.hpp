#pragma once

// Leaf geometry for the center, strong-unstable and unstable foliations:
// RK4 leaf tracing, curve iteration with point insertion, and foliation boxes
// whose plaques are stored as graphs over the leaf axes of a fixed frame.

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "phlab/map_models.hpp"

namespace phlab {

enum class Foliation { Center, StrongUnstable, Unstable };

const char* to_string(Foliation f);
/// Accepts "c", "uu" and "u". Throws InvalidArgument otherwise.
Foliation parse_foliation(std::string_view name);
int leaf_dimension(Foliation f);

/// Unit direction of E^c or E^uu at p, oriented like the matching eigenvector
/// of A. Linear models return the eigenvector itself.
Vec3 bundle_direction(const DAMap& f, const TorusPoint& p, Foliation which,
                      const BundleOptions& options = {});

struct LeafSegment {
  Foliation foliation = Foliation::Center;
  std::vector<LiftPoint> points;
  std::vector<double> arclength;  // cumulative chord length from points[0]
  std::size_t anchor = 0;         // index of the starting point

  double length() const { return arclength.empty() ? 0.0 : arclength.back(); }
  /// Signed arclength of vertex i measured from the anchor.
  double offset(std::size_t i) const { return arclength[i] - arclength[anchor]; }
  /// Linear interpolation along the polyline at arclength s from points[0].
  LiftPoint point_at(double s) const;
};

struct TraceOptions {
  double max_turn = 0.1;  // radians of field rotation tolerated per step
  BundleOptions bundle;
};

/// Integrates the unit bundle field with classical RK4 in both directions from
/// p until the parameter reaches half_length on each side. The last step is not
/// shortened, so the vertex set for a shorter trace is a prefix of a longer one.
/// Throws StepRejected when the field turns more than max_turn within a step and
/// propagates BundleNoConvergence.
LeafSegment trace_leaf(const DAMap& f, const LiftPoint& p, Foliation which, double half_length,
                       double step, const TraceOptions& options = {});

/// max over vertices of `from` of the distance to the polyline `to`.
double directed_hausdorff(const std::vector<LiftPoint>& from, const std::vector<LiftPoint>& to);
double hausdorff_distance(const std::vector<LiftPoint>& a, const std::vector<LiftPoint>& b);

struct QuasiIsometryReport {
  double q = 1.0;          // smallest Q >= 1 with d_leaf <= Q |x - y| + Q on the sample
  double max_ratio = 1.0;  // max d_leaf / |x - y|
  std::size_t pairs = 0;
};

/// Pairs (anchor, vertex) on center leaves through each base point, restricted
/// to leaf distance <= half_length.
QuasiIsometryReport quasi_isometry_report(const DAMap& f, const std::vector<TorusPoint>& bases,
                                          double half_length, double step = 0.02);

struct CurveOptions {
  double chord_max = 0.05;
  std::size_t point_budget = 4'000'000;
};

struct GrowthReport {
  std::vector<double> lengths;  // lengths[n] = length of f^n(segment)
  double rate = 0.0;            // least-squares slope of log length over the last half
  std::size_t final_points = 0;
};

/// Iterates the polyline forward, inserting parameter midpoints whose images
/// are recomputed from the initial curve whenever a chord exceeds chord_max.
/// Throws RefinementExplosion past the point budget.
GrowthReport growth_rate(const DAMap& f, const LeafSegment& segment, int n_max,
                         const CurveOptions& options = {});

struct BackwardLengthReport {
  std::vector<double> lengths;  // lengths[n] = length of f^{-n}(segment)
  double head_max = 0.0;        // max over n < n_max / 2
  double tail_max = 0.0;        // max over n >= n_max / 2
  double bound = 0.0;           // empirical K_f: max over all n
  bool bounded = false;         // tail_max <= head_max
};

/// Length of f^{-n}(segment) as the integral over the segment of the product of
/// center multipliers |Df^{-1}|E^c| along backward orbits. Pulling the polyline
/// back directly is useless: f^{-1} expands E^ss and rounding noise takes over.
BackwardLengthReport backward_center_length(const DAMap& f, const LeafSegment& segment,
                                            int n_max, const BundleOptions& bundle = {});

struct BoxSpec {
  Foliation foliation = Foliation::Center;
  LiftPoint center;
  double radius = 0.05;       // transversal half-width R
  double half_length = 0.1;   // plaque half-length W along each leaf axis
  int transversal_nodes = 9;  // per transversal axis, odd
  int leaf_nodes = 33;        // per leaf axis, odd
  double max_turn = 0.1;
  BundleOptions bundle;
  int workers = 1;
};

/// Chart coordinates: t on the transversal axes, w on the leaf axes. Unused
/// components are zero.
struct BoxChart {
  std::array<double, 2> t{};
  std::array<double, 2> w{};
};

/// Box around a center point with frame axes (E^ss, E^c, E^uu) taken at the
/// center. A plaque is the graph y_T = t + g(t, w) over leaf coordinates w,
/// where y are coordinates in the frame. Leaf coordinates of a point are thus
/// read off directly; transversal coordinates need a fixed-point solve.
class FoliationBox {
 public:
  Foliation foliation() const { return spec_.foliation; }
  int leaf_dims() const { return static_cast<int>(leaf_axes_.size()); }
  int transversal_dims() const { return static_cast<int>(trans_axes_.size()); }
  /// Frame axes (0 stable, 1 center, 2 unstable) carrying t and w.
  const std::vector<int>& transversal_axes() const { return trans_axes_; }
  const std::vector<int>& leaf_axes() const { return leaf_axes_; }
  const BoxSpec& spec() const { return spec_; }
  double radius() const { return spec_.radius; }
  double half_length() const { return spec_.half_length; }
  const LiftPoint& center() const { return spec_.center; }
  /// Columns are the frame axes (stable, center, unstable).
  const Mat3& frame() const { return frame_; }
  const Mat3& dual() const { return dual_; }
  /// sup |g| over grid nodes.
  double max_deformation() const { return max_deformation_; }

  LiftPoint point_at(const BoxChart& c) const;
  /// Frame coordinates of a lift point relative to the box center.
  Vec3 frame_coordinates(const LiftPoint& p) const;
  /// Leaf coordinates w of a lift point, valid inside or outside the box.
  std::array<double, 2> leaf_coordinates(const LiftPoint& p) const;
  /// Chart of a lift point given in frame coordinates; nullopt when the point
  /// lies outside the box.
  std::optional<BoxChart> chart_from_frame(const Vec3& y) const;
  /// Chart of a torus point, trying the lift translates near the center.
  std::optional<BoxChart> chart(const TorusPoint& p) const;
  /// Lift of p inside the box, if any.
  std::optional<LiftPoint> lift_into(const TorusPoint& p) const;

  /// Transversal offset g(t, w), interpolated from the grid.
  std::array<double, 2> deformation(const std::array<double, 2>& t,
                                    const std::array<double, 2>& w) const;

  /// Checks strict orientation of every grid cell of t -> t + g(t, w) and that
  /// the chart inverts its own grid; returns the worst round-trip error.
  double chart_round_trip_error() const;

  friend FoliationBox build_box(const DAMap& f, const BoxSpec& spec);

 private:
  FoliationBox() = default;
  std::size_t node_index(const std::array<int, 3>& idx) const;
  std::array<double, 3> node_coordinate(const std::array<int, 3>& idx) const;

  BoxSpec spec_;
  std::vector<int> trans_axes_;
  std::vector<int> leaf_axes_;
  Mat3 frame_;
  Mat3 dual_;
  // Grid over (transversal..., leaf...) chart axes; td values per node.
  std::array<int, 3> nodes_{};
  std::array<double, 3> extent_{};
  std::vector<double> g_;
  double max_deformation_ = 0.0;
  std::array<int, 3> translate_range_{1, 1, 1};
};

/// Builds plaques by integrating the graph slope equations along grid lines.
/// Throws PlaqueCollision when a plaque stops being a graph, plaques cross, or
/// the box overlaps one of its own translates in the torus; StepRejected when
/// the field turns too fast for the node spacing.
FoliationBox build_box(const DAMap& f, const BoxSpec& spec);

}  // namespace phlab
