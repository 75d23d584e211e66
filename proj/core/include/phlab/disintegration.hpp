#pragma once

// Binned disintegration of a measure over a foliation box, atomicity
// diagnostics, dynamical leaf-ball masses and partial-entropy slopes.

#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "phlab/ergodic_stats.hpp"
#include "phlab/foliation.hpp"

namespace phlab {

enum class SamplerKind { Volume, Orbit, Delta };

const char* to_string(SamplerKind k);
/// Accepts "volume", "orbit" and "delta".
SamplerKind parse_sampler(std::string_view name);

struct SamplerSpec {
  SamplerKind kind = SamplerKind::Volume;
  std::size_t samples = 1'000'000;  // accepted samples M
  std::uint64_t seed = 0;
  // Orbit sampler: the tail of this orbit, charted into the box.
  TorusPoint orbit_start{0.1234, 0.5678, 0.9012};
  std::size_t burn_in = 1000;
  std::size_t orbit_budget = 0;  // max orbit points; 0 means 1000 * samples
  // Delta sampler: every sample sits at this point.
  TorusPoint delta_point;
  int workers = 1;
};

/// Bin counts per chart axis. A box with two transversal axes has
/// transversal^2 plaque cells; two leaf axes give leaf^2 leaf cells.
struct BinSpec {
  int transversal = 32;
  int leaf = 64;
  std::size_t floor = 16;  // minimum marginal count for conditional statistics
};

class ConditionalProfile {
 public:
  const FoliationBox& box() const { return box_; }
  const BinSpec& bins() const { return bins_; }
  SamplerKind sampler() const { return sampler_; }
  std::size_t total() const { return samples_.size(); }
  int transversal_cells() const { return trans_cells_; }
  int leaf_cells() const { return leaf_cells_; }
  double transversal_width() const { return 2.0 * box_.radius() / bins_.transversal; }
  double leaf_width() const { return 2.0 * box_.half_length() / bins_.leaf; }

  int transversal_cell(const BoxChart& c) const;
  int leaf_cell(const BoxChart& c) const;

  std::uint64_t joint(int cell, int leaf) const { return joint_[index(cell, leaf)]; }
  std::uint64_t marginal(int cell) const { return marginal_[cell]; }
  /// joint / marginal; zero rows for empty cells.
  double conditional(int cell, int leaf) const { return conditional_[index(cell, leaf)]; }
  /// The conditional histogram of one plaque cell. Throws InsufficientSamples
  /// when the marginal count is below the floor.
  std::vector<double> conditional_row(int cell) const;

  /// Discrete Rokhlin identity: round(marginal * conditional) == joint in
  /// every cell.
  bool rokhlin_identity_holds() const;
  /// max over non-empty rows of |sum of the conditional row - 1|.
  double max_row_sum_error() const;

  /// Conditional distribution function of a plaque cell along a 1D leaf axis,
  /// linear within leaf bins.
  double leaf_cdf(int cell, double w) const;

  /// Raw samples of one plaque cell.
  const BoxChart* cell_begin(int cell) const { return samples_.data() + offsets_[cell]; }
  const BoxChart* cell_end(int cell) const { return samples_.data() + offsets_[cell + 1]; }
  const std::vector<BoxChart>& samples() const { return samples_; }

  friend ConditionalProfile disintegrate(const DAMap& f, const FoliationBox& box,
                                         const SamplerSpec& sampler, const BinSpec& bins);

 private:
  ConditionalProfile(FoliationBox box, const BinSpec& bins) : box_(std::move(box)), bins_(bins) {}
  std::size_t index(int cell, int leaf) const {
    return static_cast<std::size_t>(cell) * static_cast<std::size_t>(leaf_cells_) +
           static_cast<std::size_t>(leaf);
  }

  FoliationBox box_;
  BinSpec bins_;
  SamplerKind sampler_ = SamplerKind::Volume;
  int trans_cells_ = 0;
  int leaf_cells_ = 0;
  std::vector<BoxChart> samples_;      // sorted by plaque cell
  std::vector<std::size_t> offsets_;   // trans_cells_ + 1 entries
  std::vector<std::uint64_t> joint_;
  std::vector<std::uint64_t> marginal_;
  std::vector<double> conditional_;
};

/// Charts M samples into the box and assembles joint, marginal and
/// conditional histograms. Throws InvalidArgument for a delta point outside the
/// box or empty bin specs.
ConditionalProfile disintegrate(const DAMap& f, const FoliationBox& box, const SamplerSpec& sampler,
                                const BinSpec& bins);

enum class AtomicityVerdict { AtomicLike, ContinuousLike, Indeterminate };
const char* to_string(AtomicityVerdict v);

struct AtomicityThresholds {
  double atomic_top4 = 0.9;
  double continuous_top4 = 0.3;
  double continuous_entropy = 0.8;  // fraction of log(leaf cells)
  double atom_mass = 0.05;          // a leaf bin at or above this mass counts as an atom
};

struct PlaqueConcentration {
  int cell = 0;
  std::uint64_t count = 0;
  double top1 = 0.0, top4 = 0.0, top16 = 0.0;
  int atoms = 0;
  double entropy = 0.0;  // histogram entropy / log(leaf cells)
};

struct AtomicityDiagnostics {
  std::vector<PlaqueConcentration> plaques;  // cells with count >= floor
  double median_top1 = 0.0, median_top4 = 0.0, median_top16 = 0.0;
  double median_entropy = 0.0;
  AtomicityVerdict verdict = AtomicityVerdict::Indeterminate;
};

/// Concentration statistics over plaque cells at or above the floor. Throws
/// InsufficientSamples when no cell qualifies.
AtomicityDiagnostics atomicity(const ConditionalProfile& profile,
                               const AtomicityThresholds& thresholds = {});

struct LeafBallOptions {
  double trace_step = 0.01;
  int oversample = 8;            // pullback polyline spacing = leaf bin width / oversample
  std::size_t min_points = 32;   // 2D leaves: fewest samples that count as a mass
};

/// Mass of the dynamical ball B(x, n, eps) = {y in F(x) : d_F(f^i x, f^i y) < eps,
/// 0 <= i < n} under the conditional histogram of x's plaque cell. n = 0 and
/// n = 1 both give the eps-ball.
struct LeafBallMass {
  int n = 0;
  double mass = 0.0;
  bool clipped = false;      // the ball reaches the plaque boundary
  bool below_floor = false;  // narrower than one leaf bin (or too few samples in 2D)
};

/// Masses for n = 0..n_max. Once an entry is below the floor every later entry
/// is too. 1D leaves: the eps-window is pulled back along the traced leaf.
/// 2D leaves: samples of x's cell are moved onto x's plaque and the chordal
/// distance of their forward images is tested directly. Throws InvalidArgument
/// when x is not in the box.
std::vector<LeafBallMass> leaf_ball_masses(const DAMap& f, const ConditionalProfile& profile,
                                           const TorusPoint& x, double eps, int n_max,
                                           const LeafBallOptions& options = {});

/// Single mass; throws ResolutionFloor when the ball is below the resolution.
double leaf_ball_mass(const DAMap& f, const ConditionalProfile& profile, const TorusPoint& x,
                      int n, double eps, const LeafBallOptions& options = {});

struct EntropyOptions {
  std::vector<double> epsilons{0.1, 0.05, 0.025};
  int n_max = 12;
  int min_points = 3;             // usable n values needed for one base-point fit
  double max_fit_residual = 0.25; // RMS residual of -log mass fits
  LeafBallOptions ball;
  int workers = 1;
};

struct EpsilonSlope {
  double epsilon = 0.0;
  double slope = 0.0;
  double half_width = std::numeric_limits<double>::infinity();  // 2 sd / sqrt(k)
  std::size_t base_points = 0;  // base points with a usable fit
  double fit_residual = 0.0;    // mean RMS residual of the per-point fits
  /// mean -log mass per n over base points where it was usable (NaN if none)
  std::vector<double> mean_neg_log_mass;
  std::vector<std::size_t> usable;  // per n
};

struct EntropyEstimate {
  Foliation foliation = Foliation::Center;
  std::vector<EpsilonSlope> per_epsilon;  // in input order
  double h = 0.0;           // slope at the smallest epsilon
  double half_width = std::numeric_limits<double>::infinity();
  double trend = 0.0;       // slope(smallest eps) - slope(largest eps)
  bool valid = false;
  std::string note;
  std::size_t samples = 0;
};

/// k base points drawn from the profile's own samples (so they follow the
/// sampled measure), restricted to |w| <= leaf_fraction * W and to plaque cells
/// at or above the floor.
std::vector<TorusPoint> entropy_base_points(const ConditionalProfile& profile, std::size_t k,
                                            std::uint64_t seed, double leaf_fraction = 0.5);

/// Per epsilon and base point, the least-squares slope of -log mass against n
/// over usable n >= 1; slopes are averaged over base points. The estimate is
/// invalid with fewer than two epsilons, with an epsilon lacking two usable
/// base points, or when the fit residual exceeds the bound.
EntropyEstimate partial_entropy(const DAMap& f, const ConditionalProfile& profile,
                                const std::vector<TorusPoint>& bases,
                                const EntropyOptions& options = {});

enum class InequalityVerdict { Holds, Violated, Refused };
const char* to_string(InequalityVerdict v);

struct InequalityReport {
  double tau_uu = 0.0;
  double h_u = 0.0;
  double h_wu = 0.0;
  double margin = 0.0;     // tau_uu - (h_u - h_wu)
  double tolerance = 0.0;  // combined half-widths
  InequalityVerdict verdict = InequalityVerdict::Refused;
  std::string reason;
};

/// Compares h(F^u) - h(F^wu) with the top exponent. Refuses a verdict when an
/// estimate is invalid or the foliation tags do not match (u, then c).
InequalityReport entropy_inequality_check(const EntropyEstimate& u, const EntropyEstimate& wu,
                                          const ExponentReport& exponents);

}  // namespace phlab
