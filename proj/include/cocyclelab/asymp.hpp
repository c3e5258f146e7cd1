#pragma once

// Asymptotic periodicity: support-clustering detection of the cyclic
// decomposition (r, g_i, lambda_i, rho), asymptotic stability, the
// quasi-constrictivity probe, and restriction of a cocycle power to one
// component of the decomposition.

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cocyclelab/cocycle.hpp"
#include "cocyclelab/exactness.hpp"

namespace cocyclelab {

/// rho as 0-based images: rho[i] is the component at sigma(omega) that
/// receives component i.
using Permutation = std::vector<std::size_t>;

/// Cycle notation with 1-based labels, e.g. "(1 2)(3)".
std::string cycle_notation(const Permutation& rho);
Permutation compose_permutations(const Permutation& first, const Permutation& then);
/// Smallest k >= 1 with rho^k = id.
int permutation_order(const Permutation& rho);

struct FiberDecomposition {
  EnvPoint omega;
  std::size_t omega_id = 0;
  /// g_i^omega, pairwise disjoint supports, each in D(X,m).
  std::vector<Density> g;
  std::vector<std::vector<std::size_t>> supports;
  /// lambda_i^omega(f) = int f * lambda[i] dm.
  std::vector<Observable> lambda;
  Permutation rho;
  /// rho over burn_in steps, tracked directly on supports.
  Permutation rho_burn_in;
};

struct PeriodicDecomposition {
  int r = 0;
  int burn_in = 0;
  int horizon = 0;
  std::vector<FiberDecomposition> fibers;
  /// Max over fibers and point-mass f of ||P^(horizon)(f - sum lambda_i(f) g_i)||.
  double residual = 0.0;
  /// Max over fibers of ||P_omega g_i - g_rho(i) at sigma(omega)||.
  double equivariance_defect = 0.0;
  /// Max over fibers and cells of |sum_i lambda_i(e_j) - 1|.
  double lambda_sum_defect = 0.0;
  /// The one-step permutations compose to the directly tracked rho over
  /// burn_in steps on every fiber.
  bool chain_consistent = true;
  bool rho_constant = true;
  /// Supports of every component are the same on every fiber.
  bool supports_constant = true;
};

enum class PeriodicityStatus { found, none_found, indeterminate };

const char* to_string(PeriodicityStatus s);

struct PeriodicityResult {
  PeriodicityStatus status = PeriodicityStatus::none_found;
  std::optional<PeriodicDecomposition> decomposition;
  /// Component count seen (max over fibers); meaningful for none_found.
  int components = 0;
  /// Residual of the clustered decomposition; empty when the component
  /// count already exceeds r_max.
  std::optional<double> best_residual;
  std::string diagnostics;
};

struct PeriodicityOptions {
  /// Negative selects 2 log2 N capped at horizon / 2.
  int burn_in = -1;
  int horizon = 40;
  int r_max = 8;
  /// Residual and equivariance tolerance.
  double tol = 1e-9;
  /// Relative mass floor below which a cell is outside a support.
  double support_floor = 1e-12;
};

int default_burn_in(std::size_t cells, int horizon);

PeriodicityResult detect_periodicity(const CocycleFamily& c, const std::vector<EnvPoint>& omegas,
                                     const PeriodicityOptions& opts);

/// True iff r = 1.
bool stability_check(const PeriodicDecomposition& d);

/// h_omega = (1/r) sum_i g_i^omega for the fiber with the given index.
/// Throws InvariantError("invariant density") unless
/// P_omega h_omega = h_{sigma omega} within tol.
Density invariant_density_from_decomposition(const CocycleFamily& c, const PeriodicDecomposition& d,
                                             std::size_t fiber, double tol = 1e-9);

struct QcOptions {
  std::vector<double> eps = {0.1, 0.01};
  /// Candidate small sets E; empty selects cyclic windows of 1, 2, 4, ...
  /// cells with measure below max(eps).
  std::vector<std::vector<std::size_t>> sets;
  /// Probability densities to push; empty selects the point masses.
  std::vector<Density> f_basis;
  int horizon = 40;
  unsigned workers = 1;
};

struct QcRow {
  double eps = 0.0;
  /// False when no candidate set is at least a decade smaller than eps.
  bool resolved = false;
  bool passed = false;
  /// Every E in the family with m(E) < delta has tail-sup below eps.
  double delta = 0.0;
  std::size_t family_size = 0;
  double min_measure = 0.0;
  /// Worst failing set (smallest measure) when one exists.
  std::vector<std::size_t> witness;
  double witness_value = 0.0;
};

struct QcReport {
  std::vector<QcRow> rows;
  std::size_t omega_count = 0;
  std::size_t set_count = 0;
  /// Every resolved row passed.
  bool quasi_constrictive = false;
};

/// Tail-sup over sampled omega, basis f and n in the tail window of
/// int_E P^(n)_omega f dm, for every E in the family.
QcReport quasi_constrictive_probe(const CocycleFamily& c, const std::vector<EnvPoint>& omegas,
                                  const QcOptions& opts);

struct RestrictedCocycle {
  std::shared_ptr<const CocycleFamily> cocycle;
  /// Cells of the original space, in order, that make up the restricted
  /// space (weights renormalized to a probability).
  std::vector<std::size_t> cells;
  int k = 1;
};

/// P^(k) restricted to a union of cells, over sigma^k. The support must be
/// invariant under every P^(k)_omega (row mass stays inside within 1e-9);
/// throws PreconditionError otherwise.
/// Points of the original driving are points of the power driving.
RestrictedCocycle restrict_power(const CocycleFamily& c, int k, const std::vector<std::size_t>& support);

}  // namespace cocyclelab
