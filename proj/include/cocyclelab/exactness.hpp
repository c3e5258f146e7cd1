#pragma once

// Exactness of a cocycle: L1 collapse of zero-mean densities, the dual-ball
// criterion on the extreme points of the unit ball of L-infinity, and the
// tail-partition test for cocycles of cell maps.

#include <optional>
#include <vector>

#include "cocyclelab/cocycle.hpp"

namespace cocyclelab {

struct NormCurves {
  /// Per basis element, n = 0..horizon: ||P^(n)_omega f||_L1.
  std::vector<std::vector<double>> curves;
  double tail_max = 0.0;
  bool decayed = false;
  /// Largest violation of ||P^(n+1) f|| <= ||P^(n) f||.
  double max_increase = 0.0;
};

/// Throws PreconditionError if a basis element is not in L1_0.
NormCurves exactness_norms(const CocycleFamily& c, const EnvPoint& omega, const std::vector<Density>& f_basis,
                           int horizon, double tol, unsigned workers = 1);
/// Basis given as mass rows (see difference_block).
NormCurves exactness_norms(const CocycleFamily& c, const EnvPoint& omega, const MassBlock& f_basis, int horizon,
                           double tol, unsigned workers = 1);

struct DualBallCurve {
  /// n = 0..horizon: max over cells j of the sup-distance of P*^(n) 1_j
  /// from the constants (after subtracting its m-weighted mean).
  std::vector<double> diameter;
  double tail_max = 0.0;
  bool trivial = false;
};

DualBallCurve lin_dual_ball(const CocycleFamily& c, const EnvPoint& omega, int horizon, double tol);

struct TailPartition {
  /// n = 0..horizon: number of nonempty atoms of the partition generated by
  /// the pulled-back cell indicators.
  std::vector<std::size_t> atoms;
  bool trivial = false;
};

/// Requires every operator met along the orbit to be a cell map (dual
/// images {0,1}-valued within 1e-9); throws PreconditionError otherwise.
TailPartition tail_partition_trivial(const CocycleFamily& c, const EnvPoint& omega, int horizon);

/// | ||P^(n) f||_L1 - int f P*^(n) sgn(P^(n) f) dm |.
double sign_witness_gap(const CocycleFamily& c, const EnvPoint& omega, const Density& f, int n);

struct ExactnessOptions {
  int horizon = 40;
  double tol = 1e-8;
  unsigned workers = 1;
  /// Run the tail-partition test when every table entry is a cell map.
  bool tail_when_available = true;
  /// Basis elements probed by the sign-witness identity.
  std::size_t witness_probes = 4;
};

struct OmegaExactness {
  std::size_t omega_id = 0;
  NormCurves norms;
  DualBallCurve lin;
  std::optional<TailPartition> tail;
  double witness_gap = 0.0;
};

struct ExactnessReport {
  int horizon = 0;
  double tol = 0.0;
  int tail_start = 0;
  std::vector<OmegaExactness> per_omega;
  bool norm_exact = false;
  bool lin_exact = false;
  std::optional<bool> tail_exact;
  /// Every available verdict coincides, per omega and overall.
  bool agree = false;
  double witness_gap = 0.0;
};

ExactnessReport assess_exactness(const CocycleFamily& c, const std::vector<EnvPoint>& omegas,
                                 const std::vector<Density>& f_basis, const ExactnessOptions& opts);
ExactnessReport assess_exactness(const CocycleFamily& c, const std::vector<EnvPoint>& omegas,
                                 const MassBlock& f_basis, const ExactnessOptions& opts);

}  // namespace cocyclelab
