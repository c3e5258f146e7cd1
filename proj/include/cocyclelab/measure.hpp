#pragma once

// Finite measure spaces, cell-constant densities and observables, and
// Markov operators stored as row-stochastic mass-redistribution kernels.

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace cocyclelab {

inline constexpr double kExactTol = 1e-12;

/// Row-major sparse kernel. Entry (i, j) is the fraction of the mass of
/// cell i that is sent to cell j.
using Kernel = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// A stack of mass vectors, one per row. Pushing the stack through an
/// operator is a right multiplication by its kernel.
using MassBlock = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// A discretized probability space: N cells with positive weights that sum
/// to one. Two-dimensional grids keep their shape so that builders can map
/// points to cells; the cell index of (ix, iy) is iy * nx + ix.
class FiniteMeasureSpace {
 public:
  static std::shared_ptr<const FiniteMeasureSpace> uniform(std::size_t cells);
  static std::shared_ptr<const FiniteMeasureSpace> grid(std::size_t nx, std::size_t ny);
  /// Throws InvariantError("weights positive" / "weights sum").
  static std::shared_ptr<const FiniteMeasureSpace> weighted(std::vector<double> weights);

  std::size_t size() const noexcept { return static_cast<std::size_t>(weights_.size()); }
  double weight(std::size_t i) const { return weights_[static_cast<Eigen::Index>(i)]; }
  const Eigen::VectorXd& weights() const noexcept { return weights_; }
  bool is_uniform() const noexcept { return uniform_; }
  std::size_t nx() const noexcept { return nx_; }
  std::size_t ny() const noexcept { return ny_; }
  double measure(std::span<const std::size_t> cells) const;

 private:
  FiniteMeasureSpace(Eigen::VectorXd w, bool uniform, std::size_t nx, std::size_t ny)
      : weights_(std::move(w)), uniform_(uniform), nx_(nx), ny_(ny) {}

  Eigen::VectorXd weights_;
  bool uniform_;
  std::size_t nx_;
  std::size_t ny_;
};

using SpacePtr = std::shared_ptr<const FiniteMeasureSpace>;

/// Throws DimensionError unless both pointers denote the same space.
void require_same_space(const SpacePtr& a, const SpacePtr& b, const char* what);

/// Cell-constant L1 function. `values()` are density values f_i; `mass()`
/// is f_i * m_i.
class Density {
 public:
  Density(SpacePtr space, Eigen::VectorXd values);
  static Density from_mass(SpacePtr space, const Eigen::VectorXd& mass);
  static Density uniform(SpacePtr space);
  /// Probability density concentrated on one cell (value 1/m_i there).
  static Density point_mass(SpacePtr space, std::size_t cell);
  /// Normalized indicator of a union of cells.
  static Density normalized_indicator(SpacePtr space, std::span<const std::size_t> cells);

  const SpacePtr& space() const noexcept { return space_; }
  const Eigen::VectorXd& values() const noexcept { return values_; }
  double value(std::size_t i) const { return values_[static_cast<Eigen::Index>(i)]; }
  std::size_t size() const noexcept { return static_cast<std::size_t>(values_.size()); }

  Eigen::VectorXd mass() const;
  double total_mass() const;
  double l1_norm() const;

  /// Member of D(X,m): nonnegative (to -tol) with unit mass.
  bool is_probability(double tol = kExactTol) const;
  /// Member of L1_0: total mass zero.
  bool is_zero_mean(double tol = kExactTol) const;

  Density operator-(const Density& other) const;
  Density operator+(const Density& other) const;
  Density operator*(double s) const;

 private:
  SpacePtr space_;
  Eigen::VectorXd values_;
};

/// Cell-constant bounded observable.
class Observable {
 public:
  Observable(SpacePtr space, Eigen::VectorXd values);
  static Observable constant(SpacePtr space, double c);
  static Observable indicator(SpacePtr space, std::span<const std::size_t> cells);
  static Observable cell_indicator(SpacePtr space, std::size_t cell);
  static Observable zero(SpacePtr space) { return constant(std::move(space), 0.0); }

  const SpacePtr& space() const noexcept { return space_; }
  const Eigen::VectorXd& values() const noexcept { return values_; }
  double value(std::size_t i) const { return values_[static_cast<Eigen::Index>(i)]; }
  std::size_t size() const noexcept { return static_cast<std::size_t>(values_.size()); }
  double sup_norm() const;
  bool in_unit_ball(double tol = kExactTol) const { return sup_norm() <= 1.0 + tol; }

 private:
  SpacePtr space_;
  Eigen::VectorXd values_;
};

enum class Representation { exact, approximate };

/// A single Markov operator. The kernel acts on mass row vectors from the
/// right: mass' = mass * K. Its dual (Koopman) action on observables is the
/// column action g' = K * g.
class MarkovMatrix {
 public:
  /// Validates stochasticity and nonnegativity; throws InvariantError.
  MarkovMatrix(SpacePtr space, Kernel kernel, Representation rep = Representation::approximate);
  /// Skips validation. Used to build deliberately broken kernels for
  /// diagnostics.
  static MarkovMatrix unchecked(SpacePtr space, Kernel kernel,
                                Representation rep = Representation::approximate);

  static MarkovMatrix identity(SpacePtr space);
  static MarkovMatrix from_dense(SpacePtr space, const Eigen::MatrixXd& dense,
                                 Representation rep = Representation::approximate);

  const SpacePtr& space() const noexcept { return space_; }
  const Kernel& kernel() const noexcept { return kernel_; }
  Representation representation() const noexcept { return rep_; }
  std::size_t size() const noexcept { return static_cast<std::size_t>(kernel_.rows()); }

  /// True when every row sends all of its mass to a single cell, i.e. the
  /// operator is the transfer operator of a cell map.
  bool is_cell_map() const;
  /// Operator that applies *this first and then `next`.
  MarkovMatrix then(const MarkovMatrix& next) const;

  Eigen::MatrixXd dense() const { return Eigen::MatrixXd(kernel_); }

 private:
  struct Unchecked {};
  MarkovMatrix(Unchecked, SpacePtr space, Kernel kernel, Representation rep)
      : space_(std::move(space)), kernel_(std::move(kernel)), rep_(rep) {}

  SpacePtr space_;
  Kernel kernel_;
  Representation rep_;
};

double integrate(const Density& f, const Observable& g);
Density apply(const MarkovMatrix& p, const Density& f);
Observable dual_apply(const MarkovMatrix& p, const Observable& g);

struct MarkovCheck {
  double max_row_deviation = 0.0;
  double min_entry = 0.0;
  bool passed = false;
};

MarkovCheck markov_check(const MarkovMatrix& p, double tol = kExactTol);

/// Drops stored entries that are exactly zero.
void prune_zeros(MassBlock& block);

/// Mass-coordinate rows of a set of densities.
MassBlock mass_block(std::span<const Density> densities);

/// L1 norm (sum of absolute masses) of each row.
std::vector<double> row_l1_norms(const MassBlock& block);

}  // namespace cocyclelab
