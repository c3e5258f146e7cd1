#pragma once

// Builders of concrete Markov operators: exact Perron-Frobenius matrices on
// dyadic partitions, Monte-Carlo Ulam discretizations, and the duality
// diagnostic comparing the operator pairing against g o T quadrature.

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "cocyclelab/measure.hpp"

namespace cocyclelab {

enum class MapKind {
  identity,
  constant,          // T(x) = 0: every cell collapses onto cell 0
  doubling,          // T(x) = 2x mod 1
  tent,              // T(x) = 1 - |1 - 2x|
  piecewise_linear,  // T(x) = offset_i + slope_i (x - b_i) on [b_i, b_{i+1})
  baker_cyclic,      // cyclic left shift of 2k bits, acting as a cell exchange
  baker_planar,      // (x, y) -> (2x mod 1, (y + floor(2x)) / 2)
  custom,
};

const char* to_string(MapKind kind);

using Point2 = std::array<double, 2>;

class MapSpec {
 public:
  static MapSpec identity() { return MapSpec(MapKind::identity); }
  static MapSpec constant() { return MapSpec(MapKind::constant); }
  static MapSpec doubling() { return MapSpec(MapKind::doubling); }
  static MapSpec tent() { return MapSpec(MapKind::tent); }
  /// `offsets` may be empty: increasing pieces then start at 0 and
  /// decreasing pieces at 1 (full branches). Throws InvariantError if the
  /// pieces do not cover [0,1) disjointly.
  static MapSpec piecewise_linear(std::vector<double> breakpoints, std::vector<double> slopes,
                                  std::vector<double> offsets = {});
  /// Throws InvariantError unless bits is even and >= 2.
  static MapSpec baker_cyclic(int bits);
  static MapSpec baker_planar() { return MapSpec(MapKind::baker_planar, 2); }
  static MapSpec custom(std::function<double(double)> map, std::string name = "custom");
  static MapSpec custom2(std::function<Point2(Point2)> map, std::string name = "custom2");

  MapKind kind() const noexcept { return kind_; }
  int dimension() const noexcept { return dimension_; }
  int bits() const noexcept { return bits_; }
  const std::vector<double>& breakpoints() const noexcept { return breakpoints_; }
  const std::vector<double>& slopes() const noexcept { return slopes_; }
  const std::vector<double>& offsets() const noexcept { return offsets_; }
  std::string name() const;

  /// Pointwise evaluation on [0,1). Throws DomainError if the image leaves
  /// [0,1).
  double operator()(double x) const;
  Point2 operator()(Point2 p) const;

 private:
  explicit MapSpec(MapKind kind, int dimension = 1) : kind_(kind), dimension_(dimension) {}

  MapKind kind_;
  int dimension_;
  int bits_ = 0;
  std::vector<double> breakpoints_;
  std::vector<double> slopes_;
  std::vector<double> offsets_;
  std::function<double(double)> custom_;
  std::function<Point2(Point2)> custom2_;
  std::string custom_name_;
};

/// Cell permutation of the cyclic left bit shift on {0,1}^bits, with the
/// first bit as the most significant one.
std::size_t cyclic_shift_cell(std::size_t cell, int bits);

/// Exact Perron-Frobenius matrix. Supported: identity and constant on any
/// uniform space, doubling on 2^p uniform cells, baker_cyclic on 2^bits
/// uniform cells. Throws ResolutionError otherwise.
MarkovMatrix pf_exact(const MapSpec& spec, const SpacePtr& space);

/// Ulam matrix from samples_per_cell i.i.d. uniform points in each cell.
/// Row i uses a seed derived from (seed, i), so rows are independent of
/// evaluation order. Rows are renormalized to sum to one.
MarkovMatrix pf_ulam(const MapSpec& spec, const SpacePtr& space, std::size_t samples_per_cell,
                     std::uint64_t seed, unsigned workers = 1);

/// |integrate(apply(P, f), g) - int f (g o T) dm| with the right-hand side
/// evaluated by midpoint quadrature on a grid refined `refinement` times
/// per cell and f, g read as cell-constant functions.
double duality_residual(const MarkovMatrix& p, const MapSpec& spec, const Density& f, const Observable& g,
                        int refinement);

/// Same comparison for smooth f, g on [0,1): the operator side pairs the
/// cell averages of f and g, the quadrature side integrates f(x) g(T x)
/// on N * refinement midpoints. Measures the discretization error of P.
double duality_residual_smooth(const MarkovMatrix& p, const MapSpec& spec,
                               const std::function<double(double)>& f,
                               const std::function<double(double)>& g, int refinement);

/// Planted block operator: the cells are split into `blocks` contiguous
/// blocks whose sizes differ by at most one (the first N mod blocks blocks
/// get the extra cell), and block i sends its mass uniformly over block
/// order[i]. An empty order selects i -> i + 1 mod blocks.
MarkovMatrix block_cycle(const SpacePtr& space, std::size_t blocks, std::vector<std::size_t> order = {});
/// Cells of block b in the block_cycle layout.
std::vector<std::size_t> block_cells(std::size_t cells, std::size_t blocks, std::size_t b);

/// Cell containing a point of [0,1) (1-D) on a uniform space.
std::size_t cell_of(double x, std::size_t cells);

}  // namespace cocyclelab
