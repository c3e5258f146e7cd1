#pragma once

// Markov operator cocycles: the omega-indexed operator assignment, composed
// operators P^(n)_omega = P_{sigma^{n-1} omega} o ... o P_omega, invariant
// density maps, the normalized cocycle, and the support-defect diagnostic.

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cocyclelab/driving.hpp"
#include "cocyclelab/measure.hpp"

namespace cocyclelab {

using MatrixPtr = std::shared_ptr<const MarkovMatrix>;
using DrivingPtr = std::shared_ptr<const DrivingSystem>;

class CocycleFamily {
 public:
  /// `table[v]` is the operator used at every omega with feature v. The
  /// table must have exactly driving->feature_count() entries, all on
  /// `space` and all passing markov_check.
  CocycleFamily(DrivingPtr driving, SpacePtr space, std::vector<MatrixPtr> table);
  static CocycleFamily constant(DrivingPtr driving, MatrixPtr p);

  const DrivingSystem& driving() const noexcept { return *driving_; }
  const DrivingPtr& driving_ptr() const noexcept { return driving_; }
  const SpacePtr& space() const noexcept { return space_; }
  const std::vector<MatrixPtr>& table() const noexcept { return table_; }
  std::size_t size() const noexcept { return space_->size(); }

  const MarkovMatrix& at(const EnvPoint& omega) const;
  /// One operator for every feature value.
  bool is_homogeneous() const noexcept { return homogeneous_; }
  /// Every table entry is the transfer operator of a cell map.
  bool all_cell_maps() const;

 private:
  DrivingPtr driving_;
  SpacePtr space_;
  std::vector<MatrixPtr> table_;
  bool homogeneous_ = false;
};

/// Matrix of P^(n)_omega (mass action: mass * K_omega * K_{sigma omega} ...).
MarkovMatrix compose(const CocycleFamily& c, const EnvPoint& omega, int n);

/// Pushes every row of `block` through P^(n)_omega.
MassBlock push(const CocycleFamily& c, const EnvPoint& omega, int n, MassBlock block);
Density push(const CocycleFamily& c, const EnvPoint& omega, int n, const Density& f);
/// Mass vector pushed n steps.
Eigen::VectorXd push_mass(const CocycleFamily& c, const EnvPoint& omega, int n, Eigen::VectorXd mass);

/// Dual cocycle P*^(n)_omega g = P*_omega o P*_{sigma omega} o ... o
/// P*_{sigma^{n-1} omega} g.
Observable dual_push(const CocycleFamily& c, const EnvPoint& omega, int n, const Observable& g);

struct PullbackResult {
  Density density;
  /// || P^(K)_{sigma^{-K} omega} f0 - P^(K-1)_{sigma^{-K+1} omega} f0 ||_L1
  double increment = 0.0;
  int horizon = 0;
  bool converged = false;
};

/// P^(K)_{sigma^{-K} omega} f0 together with its Cauchy increment.
/// `converged` is left false; callers certify it against their tolerance.
PullbackResult invariant_density_pullback(const CocycleFamily& c, const EnvPoint& omega, int K, const Density& f0);

struct PullbackOptions {
  int max_horizon = 200;
  double tolerance = 1e-12;
  /// Starting density; uniform when empty.
  std::optional<Density> start;
};

/// Smallest K <= max_horizon whose Cauchy increment is below tolerance. On
/// failure the result at max_horizon is returned with converged = false.
PullbackResult invariant_density_auto(const CocycleFamily& c, const EnvPoint& omega, const PullbackOptions& opts);

/// omega -> h_omega with P_omega h_omega = h_{sigma omega}. Tabulated over
/// all points for finite driving, a single density for homogeneous
/// cocycles, and computed on demand for a Bernoulli environment.
class InvariantDensityMap {
 public:
  static InvariantDensityMap build(std::shared_ptr<const CocycleFamily> c, const std::vector<EnvPoint>& samples,
                                   PullbackOptions opts = {});
  /// Wraps explicitly known densities (one per point of a finite driving,
  /// or one density for a homogeneous cocycle).
  static InvariantDensityMap from_table(std::shared_ptr<const CocycleFamily> c, std::vector<Density> table,
                                        const std::vector<EnvPoint>& samples);

  Density at(const EnvPoint& omega) const;
  const CocycleFamily& cocycle() const noexcept { return *cocycle_; }
  int horizon() const noexcept { return horizon_; }
  /// Max over the sampled omega of ||P_omega h_omega - h_{sigma omega}||_L1.
  double residual() const noexcept { return residual_; }
  bool converged() const noexcept { return converged_; }
  double max_increment() const noexcept { return max_increment_; }

 private:
  InvariantDensityMap() = default;
  void measure_residual(const std::vector<EnvPoint>& samples);

  std::shared_ptr<const CocycleFamily> cocycle_;
  std::vector<Density> table_;
  bool on_demand_ = false;
  PullbackOptions opts_;
  int horizon_ = 0;
  double residual_ = 0.0;
  double max_increment_ = 0.0;
  bool converged_ = true;
};

/// Cells whose value exceeds floor_fraction * max value.
std::vector<std::size_t> support(const Eigen::VectorXd& values, double floor_fraction = 1e-9);

struct NormalizedResult {
  /// Values of P^_omega f as a function on X (zero off supp h_{sigma omega}).
  Eigen::VectorXd values;
  /// Cells that received mass from P_omega(f h_omega) but lie below the
  /// support floor of h_{sigma omega}.
  std::vector<std::size_t> excluded;
};

/// The normalized cocycle P^_omega f = P_omega(f h_omega) / h_{sigma omega}
/// acting between L1(mu_omega) and L1(mu_{sigma omega}).
class NormalizedCocycle {
 public:
  NormalizedCocycle(std::shared_ptr<const CocycleFamily> c, std::shared_ptr<const InvariantDensityMap> h,
                    double floor_fraction = 1e-9)
      : cocycle_(std::move(c)), densities_(std::move(h)), floor_(floor_fraction) {}

  const CocycleFamily& base() const noexcept { return *cocycle_; }
  const InvariantDensityMap& densities() const noexcept { return *densities_; }
  double floor_fraction() const noexcept { return floor_; }

 private:
  std::shared_ptr<const CocycleFamily> cocycle_;
  std::shared_ptr<const InvariantDensityMap> densities_;
  double floor_;
};

NormalizedResult normalized_apply(const NormalizedCocycle& nc, const EnvPoint& omega, const Eigen::VectorXd& f);

/// int f d mu_omega for a function f on X.
double weighted_integral(const Density& h, const Eigen::VectorXd& f);

/// m(supp P^(n) 1_X \ supp P^(n) h_omega).
double support_defect(const CocycleFamily& c, const InvariantDensityMap& h, const EnvPoint& omega, int n,
                      double floor_fraction = 1e-9);

}  // namespace cocyclelab
