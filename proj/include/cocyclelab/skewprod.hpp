#pragma once

// The skew product Theta(omega, x) = (sigma omega, T_omega x) with the
// invariant measure nu(A) = int mu_omega(A_omega) dP(omega), and the
// discrepancy curve n -> nu(Theta^-n A intersected with B) - nu(A) nu(B).

#include <cstdint>
#include <string>
#include <vector>

#include "cocyclelab/cocycle.hpp"

namespace cocyclelab {

/// Environment part of a rectangle: all of Omega, a set of points of a
/// finite driving system, or a cylinder of the Bernoulli shift.
class EnvSet {
 public:
  enum class Kind { all, points, cylinder };

  static EnvSet all() { return EnvSet(Kind::all); }
  static EnvSet points(std::vector<std::size_t> indices);
  static EnvSet cylinder(Cylinder c);

  Kind kind() const noexcept { return kind_; }
  const std::vector<std::size_t>& point_indices() const noexcept { return points_; }
  const Cylinder& cylinder_set() const noexcept { return cylinder_; }

  /// Throws PreconditionError if the set kind does not fit the driving.
  bool contains(const DrivingSystem& d, const EnvPoint& omega) const;
  double probability(const DrivingSystem& d) const;
  /// Cylinder view used for exact Bernoulli computations (all = no
  /// constraint).
  Cylinder as_cylinder() const;

 private:
  explicit EnvSet(Kind k) : kind_(k) {}
  Kind kind_;
  std::vector<std::size_t> points_;
  Cylinder cylinder_;
};

struct Rectangle {
  EnvSet env = EnvSet::all();
  std::vector<std::size_t> cells;
};

/// Finite union of rectangles. The caller keeps the rectangles disjoint;
/// overlapping cell sets with overlapping finite point sets are rejected.
class ProductSet {
 public:
  ProductSet() = default;
  static ProductSet rectangle(EnvSet env, std::vector<std::size_t> cells);
  static ProductSet everything(const SpacePtr& space);

  ProductSet& add(EnvSet env, std::vector<std::size_t> cells);
  const std::vector<Rectangle>& rectangles() const noexcept { return rects_; }

  /// Maximum cylinder width among the rectangles.
  std::size_t env_width() const;

 private:
  std::vector<Rectangle> rects_;
};

struct SkewOptions {
  int horizon = 30;
  double tol = 1e-3;
  /// Environment samples for the Monte-Carlo route.
  std::size_t mc_samples = 2048;
  std::uint64_t seed = 0;
  std::size_t max_env_width = 16;
  unsigned workers = 1;
};

struct NuEstimate {
  double value = 0.0;
  double std_error = 0.0;
  bool exact = true;
};

NuEstimate nu_measure(const CocycleFamily& c, const InvariantDensityMap& h, const ProductSet& a,
                      const SkewOptions& opts = {});

struct SkewCurve {
  /// n = 0..horizon.
  std::vector<double> joint;
  std::vector<double> product;
  std::vector<double> discrepancy;
  /// Same joint measure through the dual (Koopman) cocycle.
  std::vector<double> joint_koopman;
  /// Max over n of |joint - joint_koopman|.
  double route_gap = 0.0;
  /// Homogeneous cocycles: the product-set formula
  /// sum P(E_B and sigma^-n E_A) * state factor, computed independently.
  std::vector<double> joint_product_formula;
  double formula_gap = 0.0;
  /// Per n, max |P(E_B and sigma^-n E_A) - P(E_B) P(E_A)| over rectangle
  /// pairs (Bernoulli driving only).
  std::vector<double> env_factorization_gap;
  double std_error = 0.0;
  bool exact = true;
  std::string method;
  bool driving_mixing = false;
  /// Set when the driving system is not mixing.
  std::string flag;
  double tail_max = 0.0;
  bool decayed = false;
};

/// Throws UnsupportedError for non-invertible driving and
/// PreconditionError when a rectangle exceeds max_env_width.
SkewCurve skew_mixing_curve(const CocycleFamily& c, const InvariantDensityMap& h, const ProductSet& a,
                            const ProductSet& b, const SkewOptions& opts);

/// |nu(Theta^-1 A) - nu(A)|.
double theta_invariance_defect(const CocycleFamily& c, const InvariantDensityMap& h, const ProductSet& a,
                               const SkewOptions& opts);

}  // namespace cocyclelab
