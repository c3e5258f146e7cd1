#pragma once

// The environment (Omega, F, P, sigma): finite measure-preserving
// permutations and a lazily resolved two-sided Bernoulli shift.

#include <cstddef>
#include <cstdint>
#include <vector>

namespace cocyclelab {

enum class DrivingKind { finite_permutation, finite_rotation, bernoulli_shift };

const char* to_string(DrivingKind kind);

/// A point of the environment. For finite kinds only `index` matters. For
/// the Bernoulli shift the point is the symbol sequence of `path_seed`
/// read from base coordinate `offset`: its coordinate k carries the symbol
/// that the stream assigns to offset + k. Symbols are a pure function of
/// (path_seed, coordinate), so resolving more of the window never changes
/// what was already resolved.
struct EnvPoint {
  std::size_t index = 0;
  std::uint64_t path_seed = 0;
  std::int64_t offset = 0;

  friend bool operator==(const EnvPoint&, const EnvPoint&) = default;
};

/// A cylinder set on base coordinates [first, first + symbols.size()).
struct Cylinder {
  std::int64_t first = 0;
  std::vector<int> symbols;

  std::int64_t last() const { return first + static_cast<std::int64_t>(symbols.size()) - 1; }
  std::size_t width() const { return symbols.size(); }
};

class DrivingSystem {
 public:
  /// sigma must be a bijection of {0..q-1}; p must be sigma-invariant.
  static DrivingSystem finite_permutation(std::vector<std::size_t> sigma, std::vector<double> p);
  /// sigma(i) = i + 1 mod q with the uniform measure.
  static DrivingSystem finite_rotation(std::size_t q);
  /// Rotations only preserve measures that are constant on the orbit, so
  /// any non-uniform `p` is rejected by the invariance check.
  static DrivingSystem finite_rotation(std::size_t q, std::vector<double> p);
  /// Two-sided i.i.d. shift over an alphabet with the given symbol
  /// probabilities. `step` is the number of base coordinates shifted per
  /// application of sigma; step > 1 realizes powers of the unit shift.
  static DrivingSystem bernoulli_shift(std::vector<double> symbol_probabilities,
                                       int window_half_width, std::uint64_t seed, int step = 1);

  DrivingKind kind() const noexcept { return kind_; }
  bool is_finite() const noexcept { return kind_ != DrivingKind::bernoulli_shift; }
  bool is_invertible() const noexcept { return true; }
  /// Exact mixing only holds for the Bernoulli shift.
  bool is_mixing() const noexcept { return kind_ == DrivingKind::bernoulli_shift; }

  std::size_t point_count() const noexcept { return sigma_.size(); }
  const std::vector<double>& probabilities() const noexcept { return p_; }
  const std::vector<std::size_t>& sigma() const noexcept { return sigma_; }
  std::size_t alphabet_size() const noexcept { return p_.size(); }
  int window_half_width() const noexcept { return window_; }
  std::uint64_t seed() const noexcept { return seed_; }
  int step() const noexcept { return step_; }

  /// Number of distinct values of feature(): q for finite kinds,
  /// alphabet^step for the shift.
  std::size_t feature_count() const;
  /// The finite feature of omega that environment-indexed data keys on:
  /// the point index, or the word of symbols at base coordinates
  /// [0, step) encoded little-endian in the alphabet size.
  std::size_t feature(const EnvPoint& omega) const;
  /// Probability of a feature value under P.
  double feature_probability(std::size_t feature) const;

  /// Base-coordinate symbol of a Bernoulli point.
  int symbol(const EnvPoint& omega, std::int64_t coordinate) const;
  /// Symbols at base coordinates [-h, h].
  std::vector<int> window(const EnvPoint& omega, int h) const;
  /// Symbols at [-w, w] with w the configured window half-width.
  std::vector<int> resolved_window(const EnvPoint& omega) const { return window(omega, window_); }

  EnvPoint advance(const EnvPoint& omega, std::int64_t n) const;

  /// I.i.d. draws from P, deterministic in `seed`.
  std::vector<EnvPoint> sample(std::size_t count, std::uint64_t seed) const;
  /// Every point of a finite driving system, in index order.
  std::vector<EnvPoint> all_points() const;

  /// sigma^k as a driving system in its own right.
  DrivingSystem power(int k) const;

  double cylinder_probability(const Cylinder& c) const;
  /// P(C1 intersected with sigma^{-n} C2), computed exactly by merging the
  /// coordinate constraints.
  double cylinder_joint_probability(const Cylinder& c1, const Cylinder& c2, std::int64_t n) const;
  bool in_cylinder(const EnvPoint& omega, const Cylinder& c) const;

 private:
  DrivingSystem() = default;
  void validate();

  DrivingKind kind_ = DrivingKind::finite_rotation;
  std::vector<std::size_t> sigma_;
  std::vector<std::size_t> sigma_inverse_;
  std::vector<double> p_;
  std::vector<double> cdf_;
  int window_ = 0;
  std::uint64_t seed_ = 0;
  int step_ = 1;
};

/// Counter-based mixing function used to derive independent seeds.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

}  // namespace cocyclelab
