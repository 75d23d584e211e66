#include "phlab/foliation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "phlab/error.hpp"
#include "phlab/parallel.hpp"

namespace phlab {

const char* to_string(Foliation f) {
  switch (f) {
    case Foliation::Center: return "c";
    case Foliation::StrongUnstable: return "uu";
    case Foliation::Unstable: return "u";
  }
  return "?";
}

Foliation parse_foliation(std::string_view name) {
  if (name == "c" || name == "wu") return Foliation::Center;
  if (name == "uu") return Foliation::StrongUnstable;
  if (name == "u") return Foliation::Unstable;
  throw Error(ErrorCode::InvalidArgument, "unknown foliation '" + std::string(name) + "'");
}

int leaf_dimension(Foliation f) { return f == Foliation::Unstable ? 2 : 1; }

Vec3 bundle_direction(const DAMap& f, const TorusPoint& p, Foliation which,
                      const BundleOptions& options) {
  if (which == Foliation::Unstable)
    throw Error(ErrorCode::InvalidArgument, "the unstable bundle is two-dimensional");
  const auto& ev = f.base().splitting().eigenvectors;
  if (f.is_linear()) return which == Foliation::Center ? ev[1] : ev[2];
  const BundleFrame b = bundle_at(f, p, options);
  return which == Foliation::Center ? b.center : b.unstable;
}

LiftPoint LeafSegment::point_at(double s) const {
  if (points.empty()) throw Error(ErrorCode::InvalidArgument, "empty leaf segment");
  if (s <= 0.0) return points.front();
  if (s >= arclength.back()) return points.back();
  const auto it = std::upper_bound(arclength.begin(), arclength.end(), s);
  const std::size_t i = static_cast<std::size_t>(it - arclength.begin());
  const double a = arclength[i - 1], b = arclength[i];
  const double u = (s - a) / (b - a);
  return LiftPoint{points[i - 1].r + (points[i].r - points[i - 1].r) * u};
}

namespace {

Vec3 oriented(const Vec3& v, const Vec3& ref) { return dot(v, ref) < 0.0 ? -v : v; }

// One direction of a leaf trace; returns the vertices after p.
std::vector<LiftPoint> trace_half(const DAMap& f, const LiftPoint& p, Foliation which,
                                  const Vec3& initial, double half_length, double h,
                                  const TraceOptions& options) {
  const auto field = [&](const Vec3& r, const Vec3& ref) {
    return oriented(bundle_direction(f, wrap(LiftPoint{r}), which, options.bundle), ref);
  };
  std::vector<LiftPoint> out;
  Vec3 r = p.r;
  Vec3 ref = initial;
  double travelled = 0.0;
  // The tolerance keeps a parameter that lands exactly on half_length from
  // adding one more step through rounding.
  while (travelled < half_length * (1.0 - 1e-12)) {
    const Vec3 k1 = field(r, ref);
    const Vec3 k2 = field(r + k1 * (0.5 * h), k1);
    const Vec3 k3 = field(r + k2 * (0.5 * h), k2);
    const Vec3 k4 = field(r + k3 * h, k3);
    const double turn = std::max(line_angle(k1, k4), line_angle(k1, k2));
    if (turn > options.max_turn)
      throw Error(ErrorCode::StepRejected,
                  "bundle field turned " + std::to_string(turn) + " rad within one step");
    r += (k1 + 2.0 * k2 + 2.0 * k3 + k4) * (h / 6.0);
    ref = k4;
    travelled += h;
    out.push_back(LiftPoint{r});
  }
  return out;
}

}  // namespace

LeafSegment trace_leaf(const DAMap& f, const LiftPoint& p, Foliation which, double half_length,
                       double step, const TraceOptions& options) {
  if (which == Foliation::Unstable)
    throw Error(ErrorCode::InvalidArgument, "trace_leaf needs a one-dimensional bundle");
  if (!(step > 0.0) || !(half_length >= 0.0))
    throw Error(ErrorCode::InvalidArgument, "step must be positive and length non-negative");

  const Vec3 d0 = bundle_direction(f, wrap(p), which, options.bundle);
  std::vector<LiftPoint> back = trace_half(f, p, which, -d0, half_length, step, options);
  std::vector<LiftPoint> fwd = trace_half(f, p, which, d0, half_length, step, options);

  LeafSegment seg;
  seg.foliation = which;
  seg.points.reserve(back.size() + fwd.size() + 1);
  seg.points.assign(back.rbegin(), back.rend());
  seg.anchor = seg.points.size();
  seg.points.push_back(p);
  seg.points.insert(seg.points.end(), fwd.begin(), fwd.end());
  seg.arclength.resize(seg.points.size());
  seg.arclength[0] = 0.0;
  for (std::size_t i = 1; i < seg.points.size(); ++i)
    seg.arclength[i] = seg.arclength[i - 1] + norm(seg.points[i].r - seg.points[i - 1].r);
  return seg;
}

namespace {

double point_segment_distance(const Vec3& p, const Vec3& a, const Vec3& b) {
  const Vec3 ab = b - a;
  const double l2 = dot(ab, ab);
  double u = l2 > 0.0 ? dot(p - a, ab) / l2 : 0.0;
  u = std::clamp(u, 0.0, 1.0);
  return norm(p - (a + ab * u));
}

}  // namespace

double directed_hausdorff(const std::vector<LiftPoint>& from, const std::vector<LiftPoint>& to) {
  if (from.empty() || to.empty()) return std::numeric_limits<double>::infinity();
  double worst = 0.0;
  for (const auto& p : from) {
    double best = norm(p.r - to.front().r);
    for (std::size_t i = 1; i < to.size(); ++i)
      best = std::min(best, point_segment_distance(p.r, to[i - 1].r, to[i].r));
    worst = std::max(worst, best);
  }
  return worst;
}

double hausdorff_distance(const std::vector<LiftPoint>& a, const std::vector<LiftPoint>& b) {
  return std::max(directed_hausdorff(a, b), directed_hausdorff(b, a));
}

QuasiIsometryReport quasi_isometry_report(const DAMap& f, const std::vector<TorusPoint>& bases,
                                          double half_length, double step) {
  QuasiIsometryReport rep;
  for (const auto& b : bases) {
    const LeafSegment seg = trace_leaf(f, lift(b), Foliation::Center, half_length, step);
    const Vec3 x = seg.points[seg.anchor].r;
    for (std::size_t i = 0; i < seg.points.size(); ++i) {
      if (i == seg.anchor) continue;
      const double d_leaf = std::abs(seg.offset(i));
      if (d_leaf > half_length) continue;
      const double d = norm(seg.points[i].r - x);
      rep.max_ratio = std::max(rep.max_ratio, d_leaf / d);
      rep.q = std::max(rep.q, d_leaf / (d + 1.0));
      ++rep.pairs;
    }
  }
  return rep;
}

namespace {

double polyline_length(const std::vector<Vec3>& pts) {
  double s = 0.0;
  for (std::size_t i = 1; i < pts.size(); ++i) s += norm(pts[i] - pts[i - 1]);
  return s;
}

// Iterates the curve segment.point_at(s), s in [0, length], n_max times under
// f, refining chords longer than chord_max. Points are kept as offsets from a
// reference orbit that lives on the torus; absolute lift coordinates grow like
// lambda_3^n and would swamp the chords in rounding error.
std::vector<double> iterate_curve(const DAMap& f, const LeafSegment& segment, int n_max,
                                  const CurveOptions& options, std::size_t* final_points) {
  if (segment.points.size() < 2)
    throw Error(ErrorCode::InvalidArgument, "segment needs at least two points");
  if (n_max < 0) throw Error(ErrorCode::InvalidArgument, "n_max must be non-negative");

  // The offset update A delta + p(x + delta) - p(x) only rounds relative to
  // |delta| in the directions A expands; p moves points along v alone.
  const Vec3 origin = segment.points[segment.anchor].r;
  const Mat3 a = f.base().real_matrix();
  std::vector<TorusPoint> ref{wrap(LiftPoint{origin})};
  std::vector<Vec3> ref_disp;
  for (int k = 0; k < n_max; ++k) {
    ref_disp.push_back(f.displacement(ref[k]));
    ref.push_back(f.evaluate(ref[k]));
  }
  const auto step = [&](const Vec3& delta, int k) {
    Vec3 out = a * delta;
    if (!f.is_linear()) out += f.displacement(wrap(LiftPoint{ref[k].coords() + delta})) - ref_disp[k];
    return out;
  };
  const auto offset_at = [&](double s) {
    const auto& arc = segment.arclength;
    if (s <= 0.0) return segment.points.front().r - origin;
    if (s >= arc.back()) return segment.points.back().r - origin;
    const std::size_t i =
        static_cast<std::size_t>(std::upper_bound(arc.begin(), arc.end(), s) - arc.begin());
    const Vec3 d0 = segment.points[i - 1].r - origin, d1 = segment.points[i].r - origin;
    return d0 + (d1 - d0) * ((s - arc[i - 1]) / (arc[i] - arc[i - 1]));
  };
  const auto image_of = [&](double s, int k) {
    Vec3 d = offset_at(s);
    for (int i = 0; i < k; ++i) d = step(d, i);
    return d;
  };

  std::vector<double> params(segment.arclength);
  std::vector<Vec3> img(segment.points.size());
  for (std::size_t i = 0; i < img.size(); ++i) img[i] = segment.points[i].r - origin;

  std::vector<double> lengths{polyline_length(img)};
  for (int k = 1; k <= n_max; ++k) {
    for (auto& d : img) d = step(d, k - 1);
    std::vector<double> np;
    std::vector<Vec3> ni;
    np.reserve(params.size());
    ni.reserve(img.size());
    for (std::size_t i = 0; i + 1 < params.size(); ++i) {
      // Depth-first subdivision of one chord.
      std::vector<std::pair<double, Vec3>> stack{{params[i + 1], img[i + 1]}};
      double s0 = params[i];
      Vec3 p0 = img[i];
      np.push_back(s0);
      ni.push_back(p0);
      while (!stack.empty()) {
        const auto [s1, p1] = stack.back();
        const double sm = 0.5 * (s0 + s1);
        if (norm(p1 - p0) > options.chord_max && sm > s0 && sm < s1) {
          stack.emplace_back(sm, image_of(sm, k));
          if (np.size() + stack.size() > options.point_budget)
            throw Error(ErrorCode::RefinementExplosion,
                        "curve exceeded " + std::to_string(options.point_budget) + " points");
          continue;
        }
        stack.pop_back();
        if (!stack.empty()) {
          np.push_back(s1);
          ni.push_back(p1);
        }
        s0 = s1;
        p0 = p1;
      }
    }
    np.push_back(params.back());
    ni.push_back(img.back());
    params.swap(np);
    img.swap(ni);
    lengths.push_back(polyline_length(img));
  }
  if (final_points) *final_points = img.size();
  return lengths;
}

double tail_slope(const std::vector<double>& lengths) {
  const int n_max = static_cast<int>(lengths.size()) - 1;
  const int lo = n_max / 2;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int m = 0;
  for (int n = lo; n <= n_max; ++n) {
    const double y = std::log(lengths[n]);
    sx += n;
    sy += y;
    sxx += static_cast<double>(n) * n;
    sxy += n * y;
    ++m;
  }
  if (m < 2) return 0.0;
  return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

}  // namespace

GrowthReport growth_rate(const DAMap& f, const LeafSegment& segment, int n_max,
                         const CurveOptions& options) {
  if (n_max < 2) throw Error(ErrorCode::InvalidArgument, "growth rate needs n_max >= 2");
  GrowthReport rep;
  rep.lengths = iterate_curve(f, segment, n_max, options, &rep.final_points);
  rep.rate = tail_slope(rep.lengths);
  return rep;
}

BackwardLengthReport backward_center_length(const DAMap& f, const LeafSegment& segment, int n_max,
                                            const BundleOptions& bundle) {
  if (segment.points.size() < 2)
    throw Error(ErrorCode::InvalidArgument, "segment needs at least two points");
  if (n_max < 0) throw Error(ErrorCode::InvalidArgument, "n_max must be non-negative");
  const std::size_t m = segment.points.size();
  // weight[i][n]: |Df^{-n}|E^c| at vertex i.
  std::vector<std::vector<double>> weight(m, std::vector<double>(n_max + 1, 1.0));
  for (std::size_t i = 0; i < m; ++i) {
    TorusPoint z = wrap(segment.points[i]);
    for (int n = 1; n <= n_max; ++n) {
      const Vec3 ec = bundle_direction(f, z, Foliation::Center, bundle);
      const TorusPoint prev = f.inverse(z);
      weight[i][n] = weight[i][n - 1] * norm(inverse(f.derivative(prev)) * ec);
      z = prev;
    }
  }
  BackwardLengthReport rep;
  rep.lengths.assign(n_max + 1, 0.0);
  for (std::size_t i = 1; i < m; ++i) {
    const double chord = segment.arclength[i] - segment.arclength[i - 1];
    for (int n = 0; n <= n_max; ++n)
      rep.lengths[n] += 0.5 * chord * (weight[i - 1][n] + weight[i][n]);
  }
  const std::size_t half = rep.lengths.size() / 2;
  for (std::size_t n = 0; n < rep.lengths.size(); ++n) {
    if (n < half)
      rep.head_max = std::max(rep.head_max, rep.lengths[n]);
    else
      rep.tail_max = std::max(rep.tail_max, rep.lengths[n]);
    rep.bound = std::max(rep.bound, rep.lengths[n]);
  }
  rep.bounded = rep.tail_max <= rep.head_max;
  return rep;
}

// ---------------------------------------------------------------------------
// Foliation boxes

std::size_t FoliationBox::node_index(const std::array<int, 3>& idx) const {
  return (static_cast<std::size_t>(idx[0]) * nodes_[1] + idx[1]) * nodes_[2] + idx[2];
}

std::array<double, 3> FoliationBox::node_coordinate(const std::array<int, 3>& idx) const {
  std::array<double, 3> c{};
  for (int d = 0; d < 3; ++d)
    c[d] = -extent_[d] + 2.0 * extent_[d] * idx[d] / (nodes_[d] - 1);
  return c;
}

std::array<double, 2> FoliationBox::deformation(const std::array<double, 2>& t,
                                                const std::array<double, 2>& w) const {
  const int td = transversal_dims();
  std::array<double, 3> x{};
  for (int d = 0; d < td; ++d) x[d] = t[d];
  for (int d = td; d < 3; ++d) x[d] = w[d - td];

  std::array<int, 3> base{};
  std::array<double, 3> frac{};
  for (int d = 0; d < 3; ++d) {
    const double u = (x[d] + extent_[d]) / (2.0 * extent_[d]) * (nodes_[d] - 1);
    base[d] = std::clamp(static_cast<int>(std::floor(u)), 0, nodes_[d] - 2);
    frac[d] = u - base[d];  // may leave [0, 1]: linear extrapolation at the rim
  }
  std::array<double, 2> out{};
  for (int corner = 0; corner < 8; ++corner) {
    double weight = 1.0;
    std::array<int, 3> idx{};
    for (int d = 0; d < 3; ++d) {
      const int bit = (corner >> d) & 1;
      idx[d] = base[d] + bit;
      weight *= bit ? frac[d] : 1.0 - frac[d];
    }
    const std::size_t k = node_index(idx) * td;
    for (int c = 0; c < td; ++c) out[c] += weight * g_[k + c];
  }
  return out;
}

LiftPoint FoliationBox::point_at(const BoxChart& c) const {
  const auto g = deformation(c.t, c.w);
  Vec3 y{};
  for (int i = 0; i < transversal_dims(); ++i) y[trans_axes_[i]] = c.t[i] + g[i];
  for (int j = 0; j < leaf_dims(); ++j) y[leaf_axes_[j]] = c.w[j];
  return LiftPoint{spec_.center.r + frame_ * y};
}

Vec3 FoliationBox::frame_coordinates(const LiftPoint& p) const {
  return dual_ * (p.r - spec_.center.r);
}

std::array<double, 2> FoliationBox::leaf_coordinates(const LiftPoint& p) const {
  const Vec3 y = frame_coordinates(p);
  std::array<double, 2> w{};
  for (int j = 0; j < leaf_dims(); ++j) w[j] = y[leaf_axes_[j]];
  return w;
}

std::optional<BoxChart> FoliationBox::chart_from_frame(const Vec3& y) const {
  const double slack = 1e-12;
  const int td = transversal_dims();
  BoxChart c;
  for (int j = 0; j < leaf_dims(); ++j) {
    c.w[j] = y[leaf_axes_[j]];
    if (std::abs(c.w[j]) > spec_.half_length * (1.0 + slack)) return std::nullopt;
  }
  std::array<double, 2> target{};
  for (int i = 0; i < td; ++i) {
    target[i] = y[trans_axes_[i]];
    if (std::abs(target[i]) > spec_.radius + max_deformation_ + slack) return std::nullopt;
  }
  // t = target - g(t, w) is a contraction: the build checked |dg/dt| < 1/2.
  c.t = target;
  for (int it = 0; it < 200; ++it) {
    const auto g = deformation(c.t, c.w);
    double change = 0.0;
    for (int i = 0; i < td; ++i) {
      const double next = target[i] - g[i];
      change = std::max(change, std::abs(next - c.t[i]));
      c.t[i] = next;
    }
    if (change <= 1e-16 * (1.0 + spec_.radius)) break;
  }
  for (int i = 0; i < td; ++i)
    if (std::abs(c.t[i]) > spec_.radius * (1.0 + slack)) return std::nullopt;
  return c;
}

std::optional<LiftPoint> FoliationBox::lift_into(const TorusPoint& p) const {
  Vec3 d0 = p.coords() - wrap(spec_.center).coords();
  for (int i = 0; i < 3; ++i) d0[i] -= std::round(d0[i]);
  for (int a = -translate_range_[0]; a <= translate_range_[0]; ++a)
    for (int b = -translate_range_[1]; b <= translate_range_[1]; ++b)
      for (int c = -translate_range_[2]; c <= translate_range_[2]; ++c) {
        const Vec3 d = d0 + Vec3{static_cast<double>(a), static_cast<double>(b),
                                 static_cast<double>(c)};
        if (chart_from_frame(dual_ * d)) return LiftPoint{spec_.center.r + d};
      }
  return std::nullopt;
}

std::optional<BoxChart> FoliationBox::chart(const TorusPoint& p) const {
  const auto l = lift_into(p);
  if (!l) return std::nullopt;
  return chart_from_frame(frame_coordinates(*l));
}

double FoliationBox::chart_round_trip_error() const {
  const int td = transversal_dims();
  double worst = 0.0;
  std::array<int, 3> idx{};
  for (idx[0] = 0; idx[0] < nodes_[0]; ++idx[0])
    for (idx[1] = 0; idx[1] < nodes_[1]; ++idx[1])
      for (idx[2] = 0; idx[2] < nodes_[2]; ++idx[2]) {
        const auto x = node_coordinate(idx);
        BoxChart c;
        for (int d = 0; d < td; ++d) c.t[d] = x[d];
        for (int d = td; d < 3; ++d) c.w[d - td] = x[d];
        const auto back = chart_from_frame(frame_coordinates(point_at(c)));
        if (!back) return std::numeric_limits<double>::infinity();
        for (int d = 0; d < 2; ++d)
          worst = std::max({worst, std::abs(back->t[d] - c.t[d]), std::abs(back->w[d] - c.w[d])});
      }
  return worst;
}

namespace {

struct SlopeContext {
  const DAMap& f;
  const BoxSpec& spec;
  const Mat3& frame;
  const Mat3& dual;
  const std::vector<int>& trans_axes;
  const std::vector<int>& leaf_axes;
};

[[noreturn]] void not_a_graph() {
  throw Error(ErrorCode::PlaqueCollision, "plaque is not a graph over the leaf axes");
}

// Slopes dy_T/dw for a one-dimensional leaf at frame coordinates y, and the
// field direction used for turn checks.
std::pair<std::array<double, 2>, Vec3> leaf_slope(const SlopeContext& ctx, const Vec3& y) {
  const LiftPoint x{ctx.spec.center.r + ctx.frame * y};
  const Vec3 d = bundle_direction(ctx.f, wrap(x), ctx.spec.foliation, ctx.spec.bundle);
  const Vec3 yd = ctx.dual * d;
  const double along = yd[ctx.leaf_axes[0]];
  if (std::abs(along) < 0.2 * norm(yd)) not_a_graph();
  return {{yd[ctx.trans_axes[0]] / along, yd[ctx.trans_axes[1]] / along}, d};
}

// Slopes dy_0/dw_j of the center-unstable surface at frame coordinates y.
std::pair<std::array<double, 2>, Vec3> surface_slope(const SlopeContext& ctx, const Vec3& y) {
  const LiftPoint x{ctx.spec.center.r + ctx.frame * y};
  Vec3 normal;
  if (ctx.f.is_linear()) {
    const auto& ev = ctx.f.base().splitting().eigenvectors;
    normal = normalized(cross(ev[1], ev[2]));
  } else {
    const BundleFrame b = bundle_at(ctx.f, wrap(x), ctx.spec.bundle);
    normal = normalized(cross(b.center, b.unstable));
  }
  const Vec3 a0 = ctx.frame.col(0);
  const double across = dot(normal, a0);
  if (std::abs(across) < 0.2 * norm(a0)) not_a_graph();
  return {{-dot(normal, ctx.frame.col(ctx.leaf_axes[0])) / across,
           -dot(normal, ctx.frame.col(ctx.leaf_axes[1])) / across},
          normal};
}

void check_turn(const Vec3& a, const Vec3& b, double max_turn) {
  const double turn = line_angle(a, b);
  if (turn > max_turn)
    throw Error(ErrorCode::StepRejected,
                "field turned " + std::to_string(turn) + " rad between plaque nodes");
}

// RK4 for y_T along leaf axis `axis` (component index into leaf_axes) from
// frame point y over parameter increment h. `slope` returns (slopes, field).
template <class Slope>
Vec3 rk4_plaque_step(const SlopeContext& ctx, const Vec3& y, int axis, double h,
                     const Slope& slope, bool one_dim_leaf) {
  const auto deriv = [&](const Vec3& at) {
    const auto [s, field] = slope(ctx, at);
    Vec3 dy{};
    dy[ctx.leaf_axes[axis]] = 1.0;
    if (one_dim_leaf) {
      dy[ctx.trans_axes[0]] = s[0];
      dy[ctx.trans_axes[1]] = s[1];
    } else {
      dy[ctx.trans_axes[0]] = s[axis];
    }
    return std::pair{dy, field};
  };
  const auto [k1, f1] = deriv(y);
  const auto [k2, f2] = deriv(y + k1 * (0.5 * h));
  const auto [k3, f3] = deriv(y + k2 * (0.5 * h));
  const auto [k4, f4] = deriv(y + k3 * h);
  check_turn(f1, f4, ctx.spec.max_turn);
  (void)f2;
  (void)f3;
  return y + (k1 + 2.0 * k2 + 2.0 * k3 + k4) * (h / 6.0);
}

}  // namespace

FoliationBox build_box(const DAMap& f, const BoxSpec& spec) {
  if (!(spec.radius > 0.0) || !(spec.half_length > 0.0))
    throw Error(ErrorCode::InvalidArgument, "box radius and half-length must be positive");
  if (spec.transversal_nodes < 3 || spec.leaf_nodes < 3 || spec.transversal_nodes % 2 == 0 ||
      spec.leaf_nodes % 2 == 0)
    throw Error(ErrorCode::InvalidArgument, "box node counts must be odd and at least 3");

  FoliationBox box;
  box.spec_ = spec;
  switch (spec.foliation) {
    case Foliation::Center:
      box.trans_axes_ = {0, 2};
      box.leaf_axes_ = {1};
      break;
    case Foliation::StrongUnstable:
      box.trans_axes_ = {0, 1};
      box.leaf_axes_ = {2};
      break;
    case Foliation::Unstable:
      box.trans_axes_ = {0};
      box.leaf_axes_ = {1, 2};
      break;
  }

  if (f.is_linear()) {
    const auto& ev = f.base().splitting().eigenvectors;
    box.frame_ = Mat3::from_columns(ev[0], ev[1], ev[2]);
  } else {
    const BundleFrame b = bundle_at(f, wrap(spec.center), spec.bundle);
    box.frame_ = Mat3::from_columns(b.stable, b.center, b.unstable);
  }
  box.dual_ = inverse(box.frame_);

  const int td = box.transversal_dims();
  for (int d = 0; d < 3; ++d) {
    const bool trans = d < td;
    box.nodes_[d] = trans ? spec.transversal_nodes : spec.leaf_nodes;
    box.extent_[d] = trans ? spec.radius : spec.half_length;
  }
  box.g_.assign(static_cast<std::size_t>(box.nodes_[0]) * box.nodes_[1] * box.nodes_[2] * td, 0.0);

  const SlopeContext ctx{f, spec, box.frame_, box.dual_, box.trans_axes_, box.leaf_axes_};
  const int nw = spec.leaf_nodes;
  const int mid = nw / 2;
  const double hw = 2.0 * spec.half_length / (nw - 1);
  constexpr int kSubsteps = 2;

  const auto store = [&](const std::array<int, 3>& idx, const Vec3& y,
                         const std::array<double, 2>& t) {
    const std::size_t k = box.node_index(idx) * td;
    for (int i = 0; i < td; ++i) box.g_[k + i] = y[box.trans_axes_[i]] - t[i];
  };

  // March from the middle node to both ends along leaf axis `axis`, storing
  // every node; `at` maps a leaf node index to the grid index.
  const auto march = [&](const Vec3& y_mid, int axis, const std::array<double, 2>& t,
                         const auto& at, std::vector<Vec3>* visited) {
    if (visited) (*visited)[mid] = y_mid;
    store(at(mid), y_mid, t);
    for (int dir : {1, -1}) {
      Vec3 y = y_mid;
      for (int j = mid + dir; j >= 0 && j < nw; j += dir) {
        for (int s = 0; s < kSubsteps; ++s)
          y = td == 2 ? rk4_plaque_step(ctx, y, axis, dir * hw / kSubsteps, leaf_slope, true)
                      : rk4_plaque_step(ctx, y, axis, dir * hw / kSubsteps, surface_slope, false);
        if (visited) (*visited)[j] = y;
        store(at(j), y, t);
      }
    }
  };

  const int nt = spec.transversal_nodes;
  const std::size_t plaques = td == 2 ? static_cast<std::size_t>(nt) * nt : nt;
  if (f.is_linear()) {
    // Plaques are flat; g vanishes identically.
  } else {
    parallel_for(plaques, spec.workers, [&](std::size_t task) {
      const int i0 = static_cast<int>(task / (td == 2 ? nt : 1));
      const int i1 = td == 2 ? static_cast<int>(task % nt) : 0;
      std::array<double, 2> t{};
      t[0] = -spec.radius + 2.0 * spec.radius * i0 / (nt - 1);
      if (td == 2) t[1] = -spec.radius + 2.0 * spec.radius * i1 / (nt - 1);
      Vec3 y0{};
      for (int i = 0; i < td; ++i) y0[box.trans_axes_[i]] = t[i];
      if (td == 2) {
        march(y0, 0, t, [&](int j) { return std::array<int, 3>{i0, i1, j}; }, nullptr);
      } else {
        std::vector<Vec3> spine(nw);
        march(y0, 0, t, [&](int j) { return std::array<int, 3>{i0, j, mid}; }, &spine);
        for (int j = 0; j < nw; ++j)
          march(spine[j], 1, t, [&](int k) { return std::array<int, 3>{i0, j, k}; }, nullptr);
      }
    });
  }

  for (double v : box.g_) box.max_deformation_ = std::max(box.max_deformation_, std::abs(v));

  // Plaques must stay disjoint: t -> t + g(t, w) is a contraction perturbation
  // of the identity on every leaf node, which also makes the chart solvable.
  const double ht = 2.0 * spec.radius / (nt - 1);
  double lipschitz = 0.0;
  std::array<int, 3> idx{};
  for (idx[0] = 0; idx[0] < box.nodes_[0]; ++idx[0])
    for (idx[1] = 0; idx[1] < box.nodes_[1]; ++idx[1])
      for (idx[2] = 0; idx[2] < box.nodes_[2]; ++idx[2])
        for (int d = 0; d < td; ++d) {
          if (idx[d] + 1 >= box.nodes_[d]) continue;
          std::array<int, 3> next = idx;
          ++next[d];
          const std::size_t a = box.node_index(idx) * td, b = box.node_index(next) * td;
          for (int c = 0; c < td; ++c)
            lipschitz = std::max(lipschitz, std::abs(box.g_[b + c] - box.g_[a + c]) / ht);
        }
  if (!(lipschitz < 0.5))
    throw Error(ErrorCode::PlaqueCollision,
                "plaques shear too fast across the transversal (slope " +
                    std::to_string(lipschitz) + ")");

  // The box must embed in the torus: no integer translate of it may overlap.
  std::array<double, 3> reach{};
  for (int i = 0; i < td; ++i) reach[box.trans_axes_[i]] = spec.radius + box.max_deformation_;
  for (int j : box.leaf_axes_) reach[j] = spec.half_length;
  double diam2 = 0.0;
  for (double r : reach) diam2 += 4.0 * r * r;
  const int kmax = static_cast<int>(std::ceil(spectral_norm(box.frame_) * std::sqrt(diam2))) + 1;
  for (int a = -kmax; a <= kmax; ++a)
    for (int b = -kmax; b <= kmax; ++b)
      for (int c = -kmax; c <= kmax; ++c) {
        if (a == 0 && b == 0 && c == 0) continue;
        const Vec3 y = box.dual_ * Vec3{static_cast<double>(a), static_cast<double>(b),
                                        static_cast<double>(c)};
        bool overlap = true;
        for (int d = 0; d < 3 && overlap; ++d) overlap = std::abs(y[d]) < 2.0 * reach[d];
        if (overlap)
          throw Error(ErrorCode::PlaqueCollision,
                      "box overlaps its translate by (" + std::to_string(a) + ", " +
                          std::to_string(b) + ", " + std::to_string(c) + ")");
      }
  for (int i = 0; i < 3; ++i) {
    double e = 0.0;
    for (int d = 0; d < 3; ++d) e += std::abs(box.frame_(i, d)) * reach[d];
    box.translate_range_[i] = static_cast<int>(std::floor(e + 0.5));
  }
  return box;
}

}  // namespace phlab
