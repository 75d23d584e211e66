#include "phlab/map_models.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "phlab/error.hpp"

namespace phlab {

namespace {

constexpr double kPi = std::numbers::pi;

struct Plane {
  Vec3 a;
  Vec3 b;
};

Plane orthonormalize(const Vec3& a, const Vec3& b) {
  const Vec3 u = normalized(a);
  return {u, normalized(b - dot(b, u) * u)};
}

Plane apply(const Mat3& m, const Plane& p) { return orthonormalize(m * p.a, m * p.b); }

Vec3 plane_normal(const Plane& p) { return normalized(cross(p.a, p.b)); }

Vec3 orient(const Vec3& v, const Vec3& reference) { return dot(v, reference) < 0.0 ? -v : v; }

// Generic seeds: every eigen-coordinate is nonzero.
Vec3 generic_vector(const HyperbolicSplitting& s) {
  return normalized(s.from_coordinates({1.0, 1.0, 1.0}));
}

Plane generic_plane(const HyperbolicSplitting& s) {
  return orthonormalize(s.from_coordinates({1.0, 1.0, 1.0}), s.from_coordinates({1.0, -1.0, 0.5}));
}

}  // namespace

DAMap::DAMap(IntegerAutomorphism base, const BumpParameters& bump)
    : base_(std::move(base)),
      bump_(bump),
      a_(base_.real_matrix()),
      a_inv_(base_.real_inverse()) {
  if (!(bump_.radius > 0.0 && bump_.radius < 0.5))
    throw Error(ErrorCode::InvalidModel, "bump radius must lie in (0, 0.5)");
  if (!std::isfinite(bump_.amplitude))
    throw Error(ErrorCode::InvalidModel, "bump amplitude must be finite");
  const double vn = norm(bump_.direction);
  if (!(vn > 0.0) || !std::isfinite(vn))
    throw Error(ErrorCode::InvalidModel, "bump direction must be a nonzero vector");
  bump_.direction = bump_.direction * (1.0 / vn);
  diffeo_bound_ = std::abs(bump_.amplitude) * norm(a_inv_ * bump_.direction) * bump_gradient_sup();
  if (!(diffeo_bound_ < 1.0))
    throw Error(ErrorCode::InvalidModel,
                "perturbation too large for a diffeomorphism: s*|A^-1 v|*sup|grad| = " +
                    std::to_string(diffeo_bound_));
}

DAMap DAMap::linear(IntegerAutomorphism base) {
  return DAMap(std::move(base), BumpParameters{});
}

double DAMap::bump_gradient_sup() const {
  // |grad| = 6 u (1 - u^2)^2 / r0 with u = d / r0, maximal at u = 1/sqrt(5).
  return 96.0 / (25.0 * std::sqrt(5.0) * bump_.radius);
}

double DAMap::bump_value(const TorusPoint& x) const {
  const Vec3 w = torus_displacement(bump_.center, x);
  const double r2 = bump_.radius * bump_.radius;
  const double d2 = dot(w, w);
  if (d2 >= r2) return 0.0;
  const double u = 1.0 - d2 / r2;
  return u * u * u;
}

Vec3 DAMap::bump_gradient(const TorusPoint& x) const {
  const Vec3 w = torus_displacement(bump_.center, x);
  const double r2 = bump_.radius * bump_.radius;
  const double d2 = dot(w, w);
  if (d2 >= r2) return {};
  const double u = 1.0 - d2 / r2;
  return w * (-6.0 * u * u / r2);
}

Vec3 DAMap::displacement(const TorusPoint& x) const {
  if (is_linear()) return {};
  return bump_.direction * (bump_.amplitude * bump_value(x));
}

LiftPoint DAMap::evaluate_lift(const LiftPoint& p) const {
  LiftPoint out = base_.apply_lift(p);
  if (!is_linear()) out.r += displacement(wrap(p));
  return out;
}

TorusPoint DAMap::evaluate(const TorusPoint& p) const {
  if (is_linear()) return base_.apply(p);
  return wrap(evaluate_lift(lift(p)));
}

Mat3 DAMap::derivative(const TorusPoint& p) const {
  if (is_linear()) return a_;
  return a_ + outer(bump_.direction * bump_.amplitude, bump_gradient(p));
}

LiftPoint DAMap::inverse_lift(const LiftPoint& y, int max_iter) const {
  LiftPoint x = base_.apply_inverse_lift(y);
  if (is_linear()) return x;
  const double scale = std::max(1.0, norm(y.r));
  for (int it = 0; it < max_iter; ++it) {
    const Vec3 g = evaluate_lift(x).r - y.r;
    if (norm(g) <= 1e-15 * scale) return x;
    const Vec3 step = phlab::inverse(derivative(wrap(x))) * g;
    x.r -= step;
    if (norm(step) <= 1e-17 * scale) {
      if (norm(evaluate_lift(x).r - y.r) <= 1e-13 * scale) return x;
    }
  }
  if (norm(evaluate_lift(x).r - y.r) <= 1e-13 * scale) return x;
  throw Error(ErrorCode::NoConvergence, "Newton inverse did not converge");
}

TorusPoint DAMap::inverse(const TorusPoint& p, int max_iter) const {
  if (is_linear()) return base_.apply_inverse(p);
  return wrap(inverse_lift(lift(p), max_iter));
}

double BundleFrame::residual() const {
  return std::max({stable_residual, center_residual, unstable_residual});
}

VerificationReport verify_cones(const DAMap& f, const ConeField& cones, int n,
                                const ConeCheckOptions& options) {
  VerificationReport report;
  const std::array<std::pair<const char*, double>, 3> apertures{
      {{"stable", cones.stable}, {"center", cones.center}, {"unstable", cones.unstable}}};
  for (const auto& [name, alpha] : apertures) {
    if (!(alpha > 0.0 && alpha < kPi / 4.0)) {
      report.passed = false;
      report.failures.push_back(std::string("degenerate aperture for ") + name +
                                " cone: " + std::to_string(alpha));
    }
  }
  if (!report.passed || n <= 0) {
    if (n <= 0) {
      report.passed = false;
      report.failures.push_back("grid resolution must be positive");
    }
    return report;
  }

  const HyperbolicSplitting& split = f.base().splitting();
  const Mat3 basis = split.basis();
  const Mat3 dual = split.dual_matrix();
  const double ts = std::tan(cones.stable);
  const double tc = std::tan(cones.center);
  const double tu = std::tan(cones.unstable);

  const int k_samples = std::max(8, options.boundary_samples);
  std::vector<double> cosines(k_samples), sines(k_samples);
  for (int k = 0; k < k_samples; ++k) {
    cosines[k] = std::cos(2.0 * kPi * k / k_samples);
    sines[k] = std::sin(2.0 * kPi * k / k_samples);
  }

  // Unit vectors (Euclidean) spanning each cone, in ambient coordinates.
  const auto cone_vectors = [&](int axis, double t) {
    std::vector<Vec3> out;
    out.reserve(2 * 16 + 1);
    Vec3 c{};
    c[axis] = 1.0;
    out.push_back(normalized(basis * c));
    for (double frac : {0.5, 1.0})
      for (int k = 0; k < 16; ++k) {
        const double ang = 2.0 * kPi * k / 16.0;
        Vec3 e{};
        e[axis] = 1.0;
        e[(axis + 1) % 3] = frac * t * std::cos(ang);
        e[(axis + 2) % 3] = frac * t * std::sin(ang);
        out.push_back(normalized(basis * e));
      }
    return out;
  };
  const auto vs = cone_vectors(0, ts);
  const auto vc = cone_vectors(1, tc);
  const auto vu = cone_vectors(2, tu);

  double worst_u = 0.0, worst_s = 0.0, worst_cu = 0.0, worst_cs = 0.0;
  double min_jac = 1e300, max_jac = -1e300;
  const int max_iter = std::max(1, options.max_iterate);
  std::vector<double> worst_sc(max_iter, 0.0), worst_cuu(max_iter, 0.0);

  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int l = 0; l < n; ++l) {
        const TorusPoint x(static_cast<double>(i) / n, static_cast<double>(j) / n,
                           static_cast<double>(l) / n);
        const Mat3 df = f.derivative(x);
        const double jac = determinant(df);
        min_jac = std::min(min_jac, jac);
        max_jac = std::max(max_jac, jac);
        const Mat3 fwd = dual * df * basis;
        const Mat3 bwd = dual * inverse(df) * basis;
        for (int k = 0; k < k_samples; ++k) {
          const double c = cosines[k], s = sines[k];
          {
            const Vec3 w = fwd * Vec3{tu * c, tu * s, 1.0};
            worst_u = std::max(worst_u, std::hypot(w.x, w.y) / (std::abs(w.z) * tu));
          }
          {
            const Vec3 w = bwd * Vec3{1.0, ts * c, ts * s};
            worst_s = std::max(worst_s, std::hypot(w.y, w.z) / (std::abs(w.x) * ts));
          }
          {
            const Vec3 w = fwd * Vec3{tc, c, s};
            worst_cu = std::max(worst_cu, std::abs(w.x) / (std::hypot(w.y, w.z) * tc));
          }
          {
            const Vec3 w = bwd * Vec3{c, s, tc};
            worst_cs = std::max(worst_cs, std::abs(w.z) / (std::hypot(w.x, w.y) * tc));
          }
        }

        Mat3 prod = Mat3::identity();
        TorusPoint y = x;
        for (int it = 0; it < max_iter; ++it) {
          prod = (it == 0 ? df : f.derivative(y)) * prod;
          y = f.evaluate(y);
          // Growth of the axis coordinate: the rate along the bundle the
          // cone contains, without leakage from the transverse directions.
          const auto extremes = [&](const std::vector<Vec3>& vecs, int axis) {
            double lo = 1e300, hi = 0.0;
            for (const auto& v : vecs) {
              const double len = std::abs((dual * (prod * v))[axis]) / std::abs((dual * v)[axis]);
              lo = std::min(lo, len);
              hi = std::max(hi, len);
            }
            return std::pair{lo, hi};
          };
          const auto [s_lo, s_hi] = extremes(vs, 0);
          const auto [c_lo, c_hi] = extremes(vc, 1);
          const auto [u_lo, u_hi] = extremes(vu, 2);
          (void)s_lo;
          (void)u_hi;
          worst_sc[it] = std::max(worst_sc[it], s_hi / c_lo);
          worst_cuu[it] = std::max(worst_cuu[it], c_hi / u_lo);
        }
      }

  report.points = static_cast<std::size_t>(n) * n * n;
  report.unstable_margin = 1.0 - worst_u;
  report.stable_margin = 1.0 - worst_s;
  report.center_unstable_margin = 1.0 - worst_cu;
  report.center_stable_margin = 1.0 - worst_cs;
  report.min_jacobian = min_jac;
  report.max_jacobian = max_jac;

  const std::array<std::pair<const char*, double>, 4> margins{
      {{"unstable cone (forward)", report.unstable_margin},
       {"stable cone (backward)", report.stable_margin},
       {"center-unstable cone (forward)", report.center_unstable_margin},
       {"center-stable cone (backward)", report.center_stable_margin}}};
  for (const auto& [name, margin] : margins)
    if (!(margin > 0.0)) {
      report.passed = false;
      report.failures.push_back(std::string(name) + " not strictly invariant, margin " +
                                std::to_string(margin));
    }

  report.stable_center_ratio = worst_sc.back();
  report.center_unstable_ratio = worst_cuu.back();
  for (int it = 0; it < max_iter; ++it)
    if (worst_sc[it] <= options.domination_ratio && worst_cuu[it] <= options.domination_ratio) {
      report.domination_iterate = it + 1;
      report.stable_center_ratio = worst_sc[it];
      report.center_unstable_ratio = worst_cuu[it];
      break;
    }
  if (report.domination_iterate == 0) {
    report.passed = false;
    report.failures.push_back("domination ratio " + std::to_string(options.domination_ratio) +
                              " not reached within " + std::to_string(max_iter) + " iterates");
  }
  return report;
}

BundleFrame bundle_at(const DAMap& f, const TorusPoint& p, const BundleOptions& options) {
  const int n = std::max(2, options.iterations);
  const HyperbolicSplitting& split = f.base().splitting();

  std::vector<Mat3> back_df(n + 1), fwd_df(n + 1);
  {
    TorusPoint y = p;
    for (int k = 1; k <= n; ++k) {
      y = f.inverse(y);
      back_df[k] = f.derivative(y);  // maps T_{y_k} to T_{y_{k-1}}
    }
    TorusPoint z = p;
    for (int k = 0; k < n; ++k) {
      fwd_df[k] = inverse(f.derivative(z));  // maps T_{z_{k+1}} to T_{z_k}
      z = f.evaluate(z);
    }
  }

  const Vec3 seed = generic_vector(split);
  const Plane seed_plane = generic_plane(split);

  // Each direction is computed at depth n and depth n-1; their angle is the residual.
  std::array<Vec3, 2> uu{seed, seed}, ss{seed, seed};
  std::array<Plane, 2> cu{seed_plane, seed_plane}, cs{seed_plane, seed_plane};
  for (int k = n; k >= 1; --k) {
    for (int d = 0; d < 2; ++d) {
      if (d == 1 && k == n) continue;
      uu[d] = normalized(back_df[k] * uu[d]);
      cu[d] = apply(back_df[k], cu[d]);
      ss[d] = normalized(fwd_df[k - 1] * ss[d]);
      cs[d] = apply(fwd_df[k - 1], cs[d]);
    }
  }

  BundleFrame frame;
  std::array<Vec3, 2> cc;
  for (int d = 0; d < 2; ++d) cc[d] = normalized(cross(plane_normal(cs[d]), plane_normal(cu[d])));
  frame.stable = orient(ss[0], split.eigenvectors[0]);
  frame.center = orient(cc[0], split.eigenvectors[1]);
  frame.unstable = orient(uu[0], split.eigenvectors[2]);
  frame.stable_residual = line_angle(ss[0], ss[1]);
  frame.center_residual = line_angle(cc[0], cc[1]);
  frame.unstable_residual = line_angle(uu[0], uu[1]);
  frame.determinant = determinant(Mat3::from_columns(frame.stable, frame.center, frame.unstable));

  if (!(frame.residual() <= options.tolerance))
    throw Error(ErrorCode::BundleNoConvergence,
                "bundle residual " + std::to_string(frame.residual()) + " above tolerance");
  if (!(std::abs(frame.determinant) >= options.min_determinant))
    throw Error(ErrorCode::BundleNoConvergence, "bundle frame is degenerate");
  return frame;
}

OrbitBundles orbit_bundles(const DAMap& f, const TorusPoint& start, std::size_t length,
                           std::size_t margin) {
  const HyperbolicSplitting& split = f.base().splitting();
  const std::size_t total = length + 2 * margin;
  std::vector<TorusPoint> pts(total);
  std::vector<Mat3> df(total);
  pts[0] = start;
  for (std::size_t k = 0; k < total; ++k) {
    df[k] = f.derivative(pts[k]);
    if (k + 1 < total) pts[k + 1] = f.evaluate(pts[k]);
  }

  OrbitBundles out;
  out.points.assign(pts.begin() + margin, pts.begin() + margin + length);
  out.stable.resize(length);
  out.center.resize(length);
  out.unstable.resize(length);

  std::vector<Vec3> cu_normal(length);
  Vec3 u = generic_vector(split);
  Plane cu = generic_plane(split);
  for (std::size_t k = 0; k < margin + length; ++k) {
    if (k >= margin) {
      out.unstable[k - margin] = orient(u, split.eigenvectors[2]);
      cu_normal[k - margin] = plane_normal(cu);
    }
    u = normalized(df[k] * u);
    cu = apply(df[k], cu);
  }

  Vec3 s = generic_vector(split);
  Plane cs = generic_plane(split);
  for (std::size_t k = total - 1; k-- > margin;) {
    const Mat3 inv = inverse(df[k]);
    s = normalized(inv * s);
    cs = apply(inv, cs);
    if (k < margin + length) {
      out.stable[k - margin] = orient(s, split.eigenvectors[0]);
      out.center[k - margin] =
          orient(normalized(cross(plane_normal(cs), cu_normal[k - margin])), split.eigenvectors[1]);
    }
  }
  return out;
}

}  // namespace phlab

namespace phlab {

DAMap reference_da_map(double amplitude) {
  IntegerAutomorphism a = reference_automorphism();
  BumpParameters bump;
  bump.amplitude = amplitude;
  bump.center = TorusPoint(0.5, 0.5, 0.5);
  bump.radius = 0.2;
  bump.direction = a.splitting().eigenvectors[1];
  return DAMap(std::move(a), bump);
}

ConeField reference_da_cones() { return ConeField{0.6, 0.3, 0.5}; }

}  // namespace phlab
