#include "phlab/disintegration.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "phlab/error.hpp"
#include "phlab/parallel.hpp"
#include "phlab/random.hpp"

namespace phlab {

const char* to_string(SamplerKind k) {
  switch (k) {
    case SamplerKind::Volume: return "volume";
    case SamplerKind::Orbit: return "orbit";
    case SamplerKind::Delta: return "delta";
  }
  return "?";
}

SamplerKind parse_sampler(std::string_view name) {
  if (name == "volume") return SamplerKind::Volume;
  if (name == "orbit") return SamplerKind::Orbit;
  if (name == "delta") return SamplerKind::Delta;
  throw Error(ErrorCode::InvalidArgument, "unknown sampler '" + std::string(name) + "'");
}

namespace {

int bin_of(double v, double half, int bins) {
  const int b = static_cast<int>(std::floor((v + half) / (2.0 * half) * bins));
  return std::clamp(b, 0, bins - 1);
}

constexpr std::size_t kChunk = 50'000;

std::vector<BoxChart> sample_volume(const FoliationBox& box, const SamplerSpec& spec) {
  const std::size_t m = spec.samples;
  const std::size_t chunks = (m + kChunk - 1) / kChunk;
  std::vector<std::vector<BoxChart>> parts(chunks);
  const double t_half = box.radius() + box.max_deformation();
  const double w_half = box.half_length();
  parallel_for(chunks, spec.workers, [&](std::size_t c) {
    const std::size_t want = std::min(kChunk, m - c * kChunk);
    Rng rng(derive_seed(spec.seed, 1, c));
    auto& out = parts[c];
    out.reserve(want);
    while (out.size() < want) {
      Vec3 y{};
      for (int a : box.transversal_axes()) y[a] = rng.uniform(-t_half, t_half);
      for (int a : box.leaf_axes()) y[a] = rng.uniform(-w_half, w_half);
      if (const auto ch = box.chart_from_frame(y)) out.push_back(*ch);
    }
  });
  std::vector<BoxChart> all;
  all.reserve(m);
  for (const auto& p : parts) all.insert(all.end(), p.begin(), p.end());
  return all;
}

std::vector<BoxChart> sample_orbit(const DAMap& f, const FoliationBox& box,
                                   const SamplerSpec& spec) {
  const std::size_t budget = spec.orbit_budget ? spec.orbit_budget : 1000 * spec.samples;
  const std::size_t block = 1 << 16;
  std::vector<BoxChart> all;
  all.reserve(spec.samples);
  TorusPoint x = spec.orbit_start;
  for (std::size_t k = 0; k < spec.burn_in; ++k) x = f.evaluate(x);
  std::vector<TorusPoint> pts(block);
  std::vector<std::optional<BoxChart>> charts(block);
  std::size_t used = 0;
  while (all.size() < spec.samples && used < budget) {
    const std::size_t len = std::min(block, budget - used);
    for (std::size_t k = 0; k < len; ++k) {
      pts[k] = x;
      x = f.evaluate(x);
    }
    used += len;
    const std::size_t tasks = (len + 4095) / 4096;
    parallel_for(tasks, spec.workers, [&](std::size_t t) {
      for (std::size_t k = t * 4096; k < std::min(len, (t + 1) * 4096); ++k)
        charts[k] = box.chart(pts[k]);
    });
    for (std::size_t k = 0; k < len && all.size() < spec.samples; ++k)
      if (charts[k]) all.push_back(*charts[k]);
  }
  return all;
}

}  // namespace

int ConditionalProfile::transversal_cell(const BoxChart& c) const {
  int cell = 0, stride = 1;
  for (int i = 0; i < box_.transversal_dims(); ++i) {
    cell += stride * bin_of(c.t[i], box_.radius(), bins_.transversal);
    stride *= bins_.transversal;
  }
  return cell;
}

int ConditionalProfile::leaf_cell(const BoxChart& c) const {
  int cell = 0, stride = 1;
  for (int j = 0; j < box_.leaf_dims(); ++j) {
    cell += stride * bin_of(c.w[j], box_.half_length(), bins_.leaf);
    stride *= bins_.leaf;
  }
  return cell;
}

std::vector<double> ConditionalProfile::conditional_row(int cell) const {
  if (marginal_[cell] < bins_.floor)
    throw Error(ErrorCode::InsufficientSamples,
                "plaque cell " + std::to_string(cell) + " has " + std::to_string(marginal_[cell]) +
                    " samples, floor is " + std::to_string(bins_.floor));
  const auto first = conditional_.begin() + static_cast<std::ptrdiff_t>(index(cell, 0));
  return {first, first + leaf_cells_};
}

bool ConditionalProfile::rokhlin_identity_holds() const {
  for (int c = 0; c < trans_cells_; ++c)
    for (int l = 0; l < leaf_cells_; ++l) {
      const double rebuilt = static_cast<double>(marginal_[c]) * conditional(c, l);
      if (static_cast<std::uint64_t>(std::llround(rebuilt)) != joint(c, l)) return false;
    }
  return true;
}

double ConditionalProfile::max_row_sum_error() const {
  double worst = 0.0;
  for (int c = 0; c < trans_cells_; ++c) {
    if (marginal_[c] == 0) continue;
    double s = 0.0;
    for (int l = 0; l < leaf_cells_; ++l) s += conditional(c, l);
    worst = std::max(worst, std::abs(s - 1.0));
  }
  return worst;
}

double ConditionalProfile::leaf_cdf(int cell, double w) const {
  if (box_.leaf_dims() != 1) throw Error(ErrorCode::InvalidArgument, "leaf_cdf needs 1D leaves");
  const double half = box_.half_length();
  if (w <= -half) return 0.0;
  if (w >= half) return 1.0;
  const double pos = (w + half) / leaf_width();
  const int b = std::min(static_cast<int>(pos), leaf_cells_ - 1);
  double acc = 0.0;
  for (int l = 0; l < b; ++l) acc += conditional(cell, l);
  return std::min(1.0, acc + (pos - b) * conditional(cell, b));
}

ConditionalProfile disintegrate(const DAMap& f, const FoliationBox& box, const SamplerSpec& sampler,
                                const BinSpec& bins) {
  if (bins.transversal < 1 || bins.leaf < 1)
    throw Error(ErrorCode::InvalidArgument, "bin counts must be positive");
  if (sampler.samples == 0) throw Error(ErrorCode::InvalidArgument, "sample count must be positive");
  ConditionalProfile p(box, bins);
  p.sampler_ = sampler.kind;
  p.trans_cells_ = box.transversal_dims() == 2 ? bins.transversal * bins.transversal
                                               : bins.transversal;
  p.leaf_cells_ = box.leaf_dims() == 2 ? bins.leaf * bins.leaf : bins.leaf;

  std::vector<BoxChart> raw;
  switch (sampler.kind) {
    case SamplerKind::Volume: raw = sample_volume(box, sampler); break;
    case SamplerKind::Orbit: raw = sample_orbit(f, box, sampler); break;
    case SamplerKind::Delta: {
      const auto c = box.chart(sampler.delta_point);
      if (!c) throw Error(ErrorCode::InvalidArgument, "delta point is outside the box");
      raw.assign(sampler.samples, *c);
      break;
    }
  }

  const std::size_t cells = static_cast<std::size_t>(p.trans_cells_);
  p.marginal_.assign(cells, 0);
  p.joint_.assign(cells * static_cast<std::size_t>(p.leaf_cells_), 0);
  std::vector<int> cell_of(raw.size());
  for (std::size_t k = 0; k < raw.size(); ++k) {
    const int c = p.transversal_cell(raw[k]);
    cell_of[k] = c;
    ++p.marginal_[c];
    ++p.joint_[p.index(c, p.leaf_cell(raw[k]))];
  }
  p.conditional_.assign(p.joint_.size(), 0.0);
  for (int c = 0; c < p.trans_cells_; ++c) {
    if (p.marginal_[c] == 0) continue;
    const double inv = 1.0 / static_cast<double>(p.marginal_[c]);
    for (int l = 0; l < p.leaf_cells_; ++l)
      p.conditional_[p.index(c, l)] = static_cast<double>(p.joint(c, l)) * inv;
  }
  // Stable counting sort by plaque cell.
  p.offsets_.assign(cells + 1, 0);
  for (std::size_t c = 0; c < cells; ++c) p.offsets_[c + 1] = p.offsets_[c] + p.marginal_[c];
  p.samples_.resize(raw.size());
  std::vector<std::size_t> cursor(p.offsets_.begin(), p.offsets_.end() - 1);
  for (std::size_t k = 0; k < raw.size(); ++k) p.samples_[cursor[cell_of[k]]++] = raw[k];
  return p;
}

const char* to_string(AtomicityVerdict v) {
  switch (v) {
    case AtomicityVerdict::AtomicLike: return "atomic-like";
    case AtomicityVerdict::ContinuousLike: return "continuous-like";
    case AtomicityVerdict::Indeterminate: return "indeterminate";
  }
  return "?";
}

namespace {

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

}  // namespace

AtomicityDiagnostics atomicity(const ConditionalProfile& profile,
                               const AtomicityThresholds& thresholds) {
  AtomicityDiagnostics d;
  const int leaves = profile.leaf_cells();
  const double log_cells = leaves > 1 ? std::log(static_cast<double>(leaves)) : 1.0;
  std::vector<double> top1, top4, top16, ent;
  for (int c = 0; c < profile.transversal_cells(); ++c) {
    if (profile.marginal(c) < profile.bins().floor) continue;
    std::vector<double> row = profile.conditional_row(c);
    PlaqueConcentration pc;
    pc.cell = c;
    pc.count = profile.marginal(c);
    double h = 0.0;
    for (double q : row) {
      if (q > 0.0) h -= q * std::log(q);
      if (q >= thresholds.atom_mass) ++pc.atoms;
    }
    pc.entropy = leaves > 1 ? h / log_cells : 0.0;
    std::sort(row.begin(), row.end(), std::greater<>());
    double acc = 0.0;
    for (int k = 0; k < std::min(16, leaves); ++k) {
      acc += row[k];
      if (k == 0) pc.top1 = acc;
      if (k < 4) pc.top4 = acc;
      pc.top16 = acc;
    }
    pc.top4 = std::min(pc.top4, 1.0);
    pc.top16 = std::min(pc.top16, 1.0);
    top1.push_back(pc.top1);
    top4.push_back(pc.top4);
    top16.push_back(pc.top16);
    ent.push_back(pc.entropy);
    d.plaques.push_back(pc);
  }
  if (d.plaques.empty())
    throw Error(ErrorCode::InsufficientSamples, "no plaque cell reaches the sample floor");
  d.median_top1 = median(top1);
  d.median_top4 = median(top4);
  d.median_top16 = median(top16);
  d.median_entropy = median(ent);
  if (d.median_top4 > thresholds.atomic_top4)
    d.verdict = AtomicityVerdict::AtomicLike;
  else if (d.median_top4 < thresholds.continuous_top4 &&
           d.median_entropy > thresholds.continuous_entropy)
    d.verdict = AtomicityVerdict::ContinuousLike;
  return d;
}

namespace {

struct BallContext {
  LiftPoint x;
  BoxChart chart;
  int cell = 0;
};

BallContext locate(const ConditionalProfile& profile, const TorusPoint& x) {
  const FoliationBox& box = profile.box();
  const auto lifted = box.lift_into(x);
  if (!lifted) throw Error(ErrorCode::InvalidArgument, "base point is outside the box");
  BallContext ctx;
  ctx.x = *lifted;
  ctx.chart = *box.chart_from_frame(box.frame_coordinates(ctx.x));
  ctx.cell = profile.transversal_cell(ctx.chart);
  if (profile.marginal(ctx.cell) < profile.bins().floor)
    throw Error(ErrorCode::InsufficientSamples, "base point's plaque cell is below the floor");
  return ctx;
}

LiftPoint lerp(const LiftPoint& a, const LiftPoint& b, double u) {
  return LiftPoint{a.r + u * (b.r - a.r)};
}

// Source offset where the image arclength, accumulated from the anchor in the
// direction `dir`, first reaches eps. Returns +-infinity if never reached.
double crossing(const std::vector<LiftPoint>& img, std::size_t anchor, int dir, double h,
                double eps, std::size_t lo, std::size_t hi) {
  double cum = 0.0;
  std::size_t k = anchor;
  for (;;) {
    if (dir > 0 ? k >= hi : k <= lo) break;
    const std::size_t next = dir > 0 ? k + 1 : k - 1;
    const double chord = norm(img[next].r - img[k].r);
    if (cum + chord >= eps) {
      const double u = chord > 0.0 ? (eps - cum) / chord : 0.0;
      const double base = (static_cast<double>(k) - static_cast<double>(anchor)) * h;
      return base + dir * u * h;
    }
    cum += chord;
    k = next;
  }
  return dir * std::numeric_limits<double>::infinity();
}

std::vector<LeafBallMass> masses_1d(const DAMap& f, const ConditionalProfile& profile,
                                    const BallContext& ctx, double eps, int n_max,
                                    const LeafBallOptions& opt) {
  const FoliationBox& box = profile.box();
  const double h = profile.leaf_width() / std::max(1, opt.oversample);
  const double reach = eps + opt.trace_step;
  const LeafSegment seg =
      trace_leaf(f, ctx.x, box.foliation(), reach, std::min(opt.trace_step, reach),
                 TraceOptions{box.spec().max_turn, box.spec().bundle});
  const std::size_t half = static_cast<std::size_t>(std::ceil(eps / h)) + 2;
  const std::size_t count = 2 * half + 1;
  const double s0 = seg.arclength[seg.anchor];
  std::vector<LiftPoint> src(count);
  for (std::size_t k = 0; k < count; ++k)
    src[k] = seg.point_at(s0 + (static_cast<double>(k) - static_cast<double>(half)) * h);
  src[half] = ctx.x;

  auto leaf_w = [&](double offset) {
    const double pos = static_cast<double>(half) + offset / h;
    const double clamped = std::clamp(pos, 0.0, static_cast<double>(count - 1));
    const std::size_t k = std::min(static_cast<std::size_t>(clamped), count - 2);
    return box.leaf_coordinates(lerp(src[k], src[k + 1], clamped - static_cast<double>(k)))[0];
  };

  std::vector<LeafBallMass> out(static_cast<std::size_t>(n_max) + 1);
  double lo = -eps, hi = eps;
  std::vector<LiftPoint> img = src;
  bool floor_hit = false;
  const double wmax = box.half_length();
  for (int n = 0; n <= n_max; ++n) {
    if (n >= 2) {
      // Constraint from iterate i = n - 1 on the points still inside [lo, hi].
      const std::size_t klo = static_cast<std::size_t>(std::max(
          0.0, std::floor(static_cast<double>(half) + lo / h) - 1.0));
      const std::size_t khi = std::min(
          count - 1, static_cast<std::size_t>(std::ceil(static_cast<double>(half) + hi / h) + 1.0));
      for (std::size_t k = klo; k <= khi; ++k) img[k] = f.evaluate_lift(img[k]);
      hi = std::min(hi, crossing(img, half, +1, h, eps, klo, khi));
      lo = std::max(lo, crossing(img, half, -1, h, eps, klo, khi));
    }
    double wa = leaf_w(lo), wb = leaf_w(hi);
    if (wa > wb) std::swap(wa, wb);
    LeafBallMass& m = out[n];
    m.n = n;
    m.clipped = wa < -wmax || wb > wmax;
    floor_hit = floor_hit || (wb - wa) < profile.leaf_width();
    m.below_floor = floor_hit;
    m.mass = std::max(0.0, profile.leaf_cdf(ctx.cell, wb) - profile.leaf_cdf(ctx.cell, wa));
  }
  return out;
}

std::vector<LeafBallMass> masses_2d(const DAMap& f, const ConditionalProfile& profile,
                                    const BallContext& ctx, double eps, int n_max,
                                    const LeafBallOptions& opt) {
  const FoliationBox& box = profile.box();
  std::vector<LiftPoint> orbit(static_cast<std::size_t>(std::max(1, n_max)));
  orbit[0] = ctx.x;
  for (std::size_t i = 1; i < orbit.size(); ++i) orbit[i] = f.evaluate_lift(orbit[i - 1]);

  const std::size_t cap = orbit.size();
  std::vector<std::size_t> survivors(cap + 1, 0);  // survivors[k]: samples with >= k iterates inside
  std::vector<double> reach(cap + 1, 0.0);         // max |w| among them
  const double edge = box.half_length() - profile.leaf_width();
  // Leaf axes are unit vectors at a wide angle, so a leaf-coordinate gap of
  // 3 eps already puts the chord well beyond eps.
  const double gap = 3.0 * eps;
  for (const BoxChart* s = profile.cell_begin(ctx.cell); s != profile.cell_end(ctx.cell); ++s) {
    if (std::abs(s->w[0] - ctx.chart.w[0]) > gap || std::abs(s->w[1] - ctx.chart.w[1]) > gap)
      continue;
    BoxChart c = ctx.chart;
    c.w = s->w;
    LiftPoint y = box.point_at(c);
    std::size_t k = 0;
    while (k < cap && norm(y.r - orbit[k].r) < eps) {
      ++k;
      if (k < cap) y = f.evaluate_lift(y);
    }
    const double wabs = std::max(std::abs(s->w[0]), std::abs(s->w[1]));
    for (std::size_t j = 1; j <= k; ++j) {
      ++survivors[j];
      reach[j] = std::max(reach[j], wabs);
    }
  }
  const double total = static_cast<double>(profile.marginal(ctx.cell));
  std::vector<LeafBallMass> out(static_cast<std::size_t>(n_max) + 1);
  bool floor_hit = false;
  for (int n = 0; n <= n_max; ++n) {
    const std::size_t j = static_cast<std::size_t>(std::max(1, n));
    LeafBallMass& m = out[n];
    m.n = n;
    m.mass = static_cast<double>(survivors[j]) / total;
    m.clipped = reach[j] > edge;
    floor_hit = floor_hit || survivors[j] < opt.min_points;
    m.below_floor = floor_hit;
  }
  return out;
}

}  // namespace

std::vector<LeafBallMass> leaf_ball_masses(const DAMap& f, const ConditionalProfile& profile,
                                           const TorusPoint& x, double eps, int n_max,
                                           const LeafBallOptions& options) {
  if (!(eps > 0.0)) throw Error(ErrorCode::InvalidArgument, "eps must be positive");
  if (n_max < 0) throw Error(ErrorCode::InvalidArgument, "n_max must be non-negative");
  const BallContext ctx = locate(profile, x);
  if (profile.box().leaf_dims() == 1) return masses_1d(f, profile, ctx, eps, n_max, options);
  return masses_2d(f, profile, ctx, eps, n_max, options);
}

double leaf_ball_mass(const DAMap& f, const ConditionalProfile& profile, const TorusPoint& x, int n,
                      double eps, const LeafBallOptions& options) {
  const auto all = leaf_ball_masses(f, profile, x, eps, n, options);
  if (all.back().below_floor)
    throw Error(ErrorCode::ResolutionFloor,
                "dynamical ball at n=" + std::to_string(n) + " is below the histogram resolution");
  return all.back().mass;
}

std::vector<TorusPoint> entropy_base_points(const ConditionalProfile& profile, std::size_t k,
                                            std::uint64_t seed, double leaf_fraction) {
  const FoliationBox& box = profile.box();
  const double limit = leaf_fraction * box.half_length();
  std::vector<std::size_t> pool;
  for (int c = 0; c < profile.transversal_cells(); ++c) {
    if (profile.marginal(c) < profile.bins().floor) continue;
    const BoxChart* base = profile.samples().data();
    for (const BoxChart* s = profile.cell_begin(c); s != profile.cell_end(c); ++s) {
      bool inside = true;
      for (int j = 0; j < box.leaf_dims(); ++j) inside = inside && std::abs(s->w[j]) <= limit;
      if (inside) pool.push_back(static_cast<std::size_t>(s - base));
    }
  }
  if (pool.size() < k)
    throw Error(ErrorCode::InsufficientSamples, "not enough samples for the requested base points");
  Rng rng(derive_seed(seed, 2));
  std::vector<TorusPoint> out;
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + rng.below(pool.size() - i);
    std::swap(pool[i], pool[j]);
    out.push_back(wrap(box.point_at(profile.samples()[pool[i]])));
  }
  return out;
}

namespace {

struct PointFit {
  bool ok = false;
  double slope = 0.0;
  double rms = 0.0;
};

PointFit fit_point(const std::vector<LeafBallMass>& masses, int min_points,
                   std::vector<double>& neg_log) {
  std::vector<double> xs, ys;
  neg_log.assign(masses.size(), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t n = 1; n < masses.size(); ++n) {
    const LeafBallMass& m = masses[n];
    if (m.below_floor || m.clipped || !(m.mass > 0.0)) continue;
    xs.push_back(static_cast<double>(n));
    ys.push_back(-std::log(m.mass));
    neg_log[n] = ys.back();
  }
  PointFit fit;
  if (static_cast<int>(xs.size()) < min_points) return fit;
  const double k = static_cast<double>(xs.size());
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / k;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / k;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  fit.ok = true;
  fit.slope = sxy / sxx;
  double ss = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double r = ys[i] - (my + fit.slope * (xs[i] - mx));
    ss += r * r;
  }
  fit.rms = std::sqrt(ss / k);
  return fit;
}

}  // namespace

EntropyEstimate partial_entropy(const DAMap& f, const ConditionalProfile& profile,
                                const std::vector<TorusPoint>& bases,
                                const EntropyOptions& options) {
  if (options.epsilons.empty()) throw Error(ErrorCode::InvalidArgument, "no epsilon given");
  if (options.n_max < 1) throw Error(ErrorCode::InvalidArgument, "n_max must be >= 1");
  EntropyEstimate est;
  est.foliation = profile.box().foliation();
  est.samples = profile.total();
  const std::size_t nn = static_cast<std::size_t>(options.n_max) + 1;

  for (double eps : options.epsilons) {
    std::vector<PointFit> fits(bases.size());
    std::vector<std::vector<double>> logs(bases.size());
    parallel_for(bases.size(), options.workers, [&](std::size_t b) {
      const auto masses = leaf_ball_masses(f, profile, bases[b], eps, options.n_max, options.ball);
      fits[b] = fit_point(masses, options.min_points, logs[b]);
    });
    EpsilonSlope es;
    es.epsilon = eps;
    es.mean_neg_log_mass.assign(nn, std::numeric_limits<double>::quiet_NaN());
    es.usable.assign(nn, 0);
    for (std::size_t n = 1; n < nn; ++n) {
      double acc = 0.0;
      for (const auto& l : logs)
        if (!std::isnan(l[n])) {
          acc += l[n];
          ++es.usable[n];
        }
      if (es.usable[n]) es.mean_neg_log_mass[n] = acc / static_cast<double>(es.usable[n]);
    }
    std::vector<double> slopes;
    double rms = 0.0;
    for (const auto& fit : fits)
      if (fit.ok) {
        slopes.push_back(fit.slope);
        rms += fit.rms;
      }
    es.base_points = slopes.size();
    if (!slopes.empty()) {
      const double k = static_cast<double>(slopes.size());
      es.slope = std::accumulate(slopes.begin(), slopes.end(), 0.0) / k;
      es.fit_residual = rms / k;
      if (slopes.size() >= 2) {
        double var = 0.0;
        for (double s : slopes) var += (s - es.slope) * (s - es.slope);
        var /= k - 1.0;
        es.half_width = 2.0 * std::sqrt(var / k);
      }
    }
    est.per_epsilon.push_back(std::move(es));
  }

  const auto by_eps = [](const EpsilonSlope& a, const EpsilonSlope& b) {
    return a.epsilon < b.epsilon;
  };
  const EpsilonSlope& smallest = *std::min_element(est.per_epsilon.begin(), est.per_epsilon.end(), by_eps);
  const EpsilonSlope& largest = *std::max_element(est.per_epsilon.begin(), est.per_epsilon.end(), by_eps);
  est.h = smallest.slope;
  est.half_width = smallest.half_width;
  est.trend = smallest.slope - largest.slope;

  est.valid = true;
  if (est.per_epsilon.size() < 2) {
    est.valid = false;
    est.half_width = std::numeric_limits<double>::infinity();
    est.note = "a single epsilon gives no extrapolation trend";
  }
  for (const auto& es : est.per_epsilon) {
    if (es.base_points < 2) {
      est.valid = false;
      est.note = "epsilon " + std::to_string(es.epsilon) + " has fewer than two usable base points";
    } else if (es.fit_residual > options.max_fit_residual) {
      est.valid = false;
      est.note = "fit residual at epsilon " + std::to_string(es.epsilon) + " exceeds the bound";
    }
  }
  if (!est.valid) est.half_width = std::numeric_limits<double>::infinity();
  return est;
}

const char* to_string(InequalityVerdict v) {
  switch (v) {
    case InequalityVerdict::Holds: return "holds";
    case InequalityVerdict::Violated: return "violated";
    case InequalityVerdict::Refused: return "refused";
  }
  return "?";
}

InequalityReport entropy_inequality_check(const EntropyEstimate& u, const EntropyEstimate& wu,
                                          const ExponentReport& exponents) {
  InequalityReport r;
  r.tau_uu = exponents.exponents[0];
  r.h_u = u.h;
  r.h_wu = wu.h;
  r.margin = r.tau_uu - (r.h_u - r.h_wu);
  r.tolerance = u.half_width + wu.half_width + exponents.half_width;
  if (u.foliation != Foliation::Unstable || wu.foliation != Foliation::Center) {
    r.verdict = InequalityVerdict::Refused;
    r.reason = "expected estimates for the u and c foliations";
  } else if (!u.valid || !wu.valid) {
    r.verdict = InequalityVerdict::Refused;
    r.tolerance = std::numeric_limits<double>::infinity();
    r.reason = !u.valid ? "u estimate invalid: " + u.note : "c estimate invalid: " + wu.note;
  } else {
    r.verdict = r.margin >= -r.tolerance ? InequalityVerdict::Holds : InequalityVerdict::Violated;
  }
  return r;
}

}  // namespace phlab
