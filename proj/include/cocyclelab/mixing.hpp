#pragma once

// Correlation functionals and estimators for prior/posterior mixing with
// homogeneous and inhomogeneous observables, geometric rate fits, and the
// symbolic baker counterexample separating the two observable classes.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "cocyclelab/cocycle.hpp"

namespace cocyclelab {

enum class Notion { prior_hom, post_hom, prior_inhom, post_inhom };

const char* to_string(Notion notion);
/// Accepts prior-hom | post-hom | prior-inhom | post-inhom.
Notion parse_notion(const std::string& text);
bool is_prior(Notion n);
bool is_homogeneous(Notion n);

/// omega -> g_omega. Step maps key on the driving feature; orbit schedules
/// are defined along the forward orbit of one base point.
class ObservableMap {
 public:
  static ObservableMap homogeneous(Observable g);
  static ObservableMap step(DrivingPtr driving, std::vector<Observable> per_feature);
  /// g at sigma^n(base) is schedule[n]; any other point is off the orbit.
  static ObservableMap orbit_schedule(DrivingPtr driving, EnvPoint base, std::vector<Observable> schedule);

  /// Throws ScheduleError for an orbit schedule queried off its orbit.
  const Observable& at(const EnvPoint& omega) const;
  bool is_homogeneous() const noexcept { return mode_ == Mode::homogeneous; }
  double sup_norm() const;
  const SpacePtr& space() const { return values_.front().space(); }

 private:
  enum class Mode { homogeneous, step, orbit };
  ObservableMap(Mode mode, DrivingPtr d, std::vector<Observable> values, EnvPoint base = {})
      : mode_(mode), driving_(std::move(d)), values_(std::move(values)), base_(base) {}

  Mode mode_;
  DrivingPtr driving_;
  std::vector<Observable> values_;
  EnvPoint base_;
};

/// int P^(n)_omega f g dm; f must lie in L1_0.
double correlation_hom(const CocycleFamily& c, const EnvPoint& omega, const Density& f, const Observable& g, int n);
/// int P^(n)_omega f g_{sigma^n omega} dm; f must lie in L1_0.
double correlation_inhom(const CocycleFamily& c, const EnvPoint& omega, const Density& f, const ObservableMap& g,
                         int n);

/// Differences of consecutive cell indicators, scaled to mass +-1/2. They
/// span L1_0 on the grid.
std::vector<Density> difference_basis(const SpacePtr& space);
/// The same basis as sparse mass rows, for spaces too large to hold one
/// dense vector per element.
MassBlock difference_block(const SpacePtr& space);
/// Cell indicators; they span L-infinity on the grid.
std::vector<Observable> indicator_basis(const SpacePtr& space);
std::vector<ObservableMap> homogeneous_maps(const std::vector<Observable>& basis);
/// One step map per (feature value v, cell j): the indicator of j when
/// feature(omega) = v and zero otherwise.
std::vector<ObservableMap> step_indicator_maps(const DrivingPtr& driving, const SpacePtr& space);

struct RateFit {
  /// Fitted lambda in |value_n| ~ C lambda^n; 0 when the curve vanishes
  /// identically or drops to zero right after its peak.
  double rate = 0.0;
  double log_c = 0.0;
  double r_squared = 1.0;
  int points = 0;
};

/// Least-squares fit of log|v_n| = log C + n log lambda over the decaying
/// segment that starts at the peak and ends before the first value below
/// `relative_floor` times the peak.
RateFit fit_geometric_rate(std::span<const double> curve, double relative_floor = 1e-13);

/// Index of the first element of the tail window (last 10% of 0..horizon).
int tail_start(int horizon);

struct CurveKey {
  std::size_t omega = 0;
  std::size_t f = 0;
  std::size_t g = 0;
};

using CurveSink = std::function<void(const CurveKey&, std::span<const double>)>;

struct MixingOptions {
  int horizon = 40;
  double tol = 1e-6;
  bool keep_curves = false;
  bool per_curve_rates = true;
  unsigned workers = 1;
  /// Receives every curve in (omega, f, g) order.
  CurveSink sink;
};

struct MixingReport {
  Notion notion = Notion::prior_hom;
  int horizon = 0;
  double tol = 0.0;
  int tail_start = 0;
  bool decayed = false;
  /// Largest |correlation| in the tail window over everything.
  double tail_max = 0.0;
  /// Prior notions: per sampled omega, the first n after which every
  /// (f, g) correlation stays below tol (horizon + 1 if never).
  std::vector<int> omega_thresholds;
  /// Posterior notions: per (f, g) pair (row-major in g), the first n
  /// after which the correlation stays below tol for every sampled omega.
  std::vector<int> pair_thresholds;
  /// n -> max over (omega, f, g) of |correlation|.
  std::vector<double> envelope;
  /// The envelope does not increase anywhere in the tail window.
  bool envelope_monotone_tail = false;
  RateFit envelope_rate;
  /// Per (omega, f, g) rate fits when requested.
  std::vector<RateFit> curve_rates;
  /// Per (omega, f, g) curves of length horizon + 1 when requested.
  std::vector<std::vector<double>> curves;
  std::size_t f_count = 0;
  std::size_t g_count = 0;
  std::size_t omega_count = 0;
};

/// Throws PreconditionError on empty bases, f outside L1_0, or an
/// inhomogeneous g passed to a homogeneous notion.
MixingReport estimate_mixing(const CocycleFamily& c, Notion notion, const std::vector<Density>& f_basis,
                             const std::vector<ObservableMap>& g_basis, const std::vector<EnvPoint>& omegas,
                             const MixingOptions& opts);

struct CounterexampleReport {
  int k = 0;
  int horizon = 0;
  std::size_t cells = 0;
  /// n = 0..horizon: int P^(n) f g_{sigma^n omega} dm with g_n = L^n 1_A.
  std::vector<double> inhomogeneous;
  /// m(supp L^n 1_A intersected with supp L^n 1_{X\A}).
  std::vector<double> overlap;
  /// int (L^n 1_A)^2 dm.
  std::vector<double> square_integral;
  /// Homogeneous contrast with the fixed observable 1_A.
  std::vector<double> homogeneous_fixed_a;
  /// Homogeneous contrast: max over the cell-indicator basis.
  std::vector<double> homogeneous_cell_max;
  bool disjoint = false;
  bool inhomogeneous_constant = false;
};

/// Symbolic baker model on 2^(2k) cells driven by a rotation whose orbit
/// does not close before the horizon. Throws HorizonError when
/// horizon > 2k and PreconditionError when k < 2.
CounterexampleReport orbit_counterexample(int k, int horizon);

}  // namespace cocyclelab
