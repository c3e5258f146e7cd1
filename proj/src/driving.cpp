#include "cocyclelab/driving.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <string>

#include "cocyclelab/errors.hpp"

namespace cocyclelab {

namespace {

constexpr double kProbTol = 1e-12;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double unit_from_bits(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

void check_probability_vector(const std::vector<double>& p, const char* what) {
  if (p.empty()) throw InvariantError("probabilities", std::string(what) + " is empty");
  double sum = 0.0;
  for (double v : p) {
    if (!(v >= 0.0)) throw InvariantError("probabilities", std::string(what) + " has a negative entry");
    sum += v;
  }
  if (std::abs(sum - 1.0) > kProbTol) {
    throw InvariantError("probabilities sum", std::string(what) + " sums to " + std::to_string(sum));
  }
}

}  // namespace

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  return splitmix64(splitmix64(a) ^ (b * 0xd1b54a32d192ed03ULL + 0x8cb92ba72f3d8dd7ULL));
}

const char* to_string(DrivingKind kind) {
  switch (kind) {
    case DrivingKind::finite_permutation: return "finite_permutation";
    case DrivingKind::finite_rotation: return "finite_rotation";
    case DrivingKind::bernoulli_shift: return "bernoulli_shift";
  }
  return "unknown";
}

DrivingSystem DrivingSystem::finite_permutation(std::vector<std::size_t> sigma, std::vector<double> p) {
  DrivingSystem d;
  d.kind_ = DrivingKind::finite_permutation;
  d.sigma_ = std::move(sigma);
  d.p_ = std::move(p);
  d.validate();
  return d;
}

DrivingSystem DrivingSystem::finite_rotation(std::size_t q) {
  return finite_rotation(q, std::vector<double>(q, 1.0 / static_cast<double>(q)));
}

DrivingSystem DrivingSystem::finite_rotation(std::size_t q, std::vector<double> p) {
  DrivingSystem d;
  d.kind_ = DrivingKind::finite_rotation;
  d.sigma_.resize(q);
  for (std::size_t i = 0; i < q; ++i) d.sigma_[i] = (i + 1) % q;
  d.p_ = std::move(p);
  d.validate();
  return d;
}

DrivingSystem DrivingSystem::bernoulli_shift(std::vector<double> symbol_probabilities, int window_half_width,
                                             std::uint64_t seed, int step) {
  DrivingSystem d;
  d.kind_ = DrivingKind::bernoulli_shift;
  d.p_ = std::move(symbol_probabilities);
  d.window_ = window_half_width;
  d.seed_ = seed;
  d.step_ = step;
  d.validate();
  return d;
}

void DrivingSystem::validate() {
  if (kind_ == DrivingKind::bernoulli_shift) {
    check_probability_vector(p_, "symbol probabilities");
    if (window_ < 0) throw InvariantError("window", "window half-width must be nonnegative");
    if (step_ < 1) throw InvariantError("step", "shift step must be positive");
    cdf_.resize(p_.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < p_.size(); ++i) cdf_[i] = (acc += p_[i]);
    return;
  }
  const std::size_t q = sigma_.size();
  if (q == 0) throw InvariantError("point count", "finite driving needs at least one point");
  if (p_.size() != q) throw InvariantError("probabilities", "probability vector length differs from q");
  check_probability_vector(p_, "driving probabilities");
  std::vector<std::size_t> inverse(q, q);
  for (std::size_t i = 0; i < q; ++i) {
    if (sigma_[i] >= q || inverse[sigma_[i]] != q) {
      throw InvariantError("sigma bijective", "sigma is not a bijection of {0.." + std::to_string(q - 1) + "}");
    }
    inverse[sigma_[i]] = i;
  }
  // P(sigma^{-1}{j}) = p[sigma^{-1}(j)] must equal p[j].
  for (std::size_t j = 0; j < q; ++j) {
    if (std::abs(p_[inverse[j]] - p_[j]) > kProbTol) {
      throw InvariantError("sigma invariance", "P is not sigma-invariant at point " + std::to_string(j));
    }
  }
  sigma_inverse_ = std::move(inverse);
}

std::size_t DrivingSystem::feature_count() const {
  if (is_finite()) return sigma_.size();
  std::size_t count = 1;
  for (int s = 0; s < step_; ++s) count *= p_.size();
  return count;
}

std::size_t DrivingSystem::feature(const EnvPoint& omega) const {
  if (is_finite()) return omega.index;
  std::size_t value = 0;
  std::size_t scale = 1;
  for (int s = 0; s < step_; ++s) {
    value += static_cast<std::size_t>(symbol(omega, s)) * scale;
    scale *= p_.size();
  }
  return value;
}

double DrivingSystem::feature_probability(std::size_t feature) const {
  if (is_finite()) return p_.at(feature);
  double prob = 1.0;
  for (int s = 0; s < step_; ++s) {
    prob *= p_[feature % p_.size()];
    feature /= p_.size();
  }
  return prob;
}

int DrivingSystem::symbol(const EnvPoint& omega, std::int64_t coordinate) const {
  if (is_finite()) throw PreconditionError("symbol() is only defined for the Bernoulli shift");
  const auto absolute = static_cast<std::uint64_t>(omega.offset + coordinate);
  const double u = unit_from_bits(mix_seed(omega.path_seed, absolute));
  const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
  const auto s = static_cast<int>(std::distance(cdf_.begin(), it));
  return std::min(s, static_cast<int>(p_.size()) - 1);
}

std::vector<int> DrivingSystem::window(const EnvPoint& omega, int h) const {
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(2 * h + 1));
  for (int k = -h; k <= h; ++k) out.push_back(symbol(omega, k));
  return out;
}

EnvPoint DrivingSystem::advance(const EnvPoint& omega, std::int64_t n) const {
  EnvPoint out = omega;
  if (!is_finite()) {
    out.offset += n * step_;
    return out;
  }
  const auto q = static_cast<std::int64_t>(sigma_.size());
  if (kind_ == DrivingKind::finite_rotation) {
    out.index = static_cast<std::size_t>(((static_cast<std::int64_t>(omega.index) + n) % q + q) % q);
    return out;
  }
  const auto& table = n >= 0 ? sigma_ : sigma_inverse_;
  for (std::int64_t s = 0; s < std::abs(n); ++s) out.index = table[out.index];
  return out;
}

std::vector<EnvPoint> DrivingSystem::sample(std::size_t count, std::uint64_t seed) const {
  if (count == 0) throw PreconditionError("sample count must be at least 1");
  std::vector<EnvPoint> out;
  out.reserve(count);
  if (is_finite()) {
    std::mt19937_64 rng(seed);
    for (std::size_t i = 0; i < count; ++i) {
      const double u = unit_from_bits(rng());
      double acc = 0.0;
      std::size_t pick = p_.size() - 1;
      for (std::size_t j = 0; j < p_.size(); ++j) {
        acc += p_[j];
        if (u < acc) {
          pick = j;
          break;
        }
      }
      out.push_back(EnvPoint{pick, 0, 0});
    }
    return out;
  }
  for (std::size_t i = 0; i < count; ++i) {
    out.push_back(EnvPoint{0, mix_seed(mix_seed(seed_, seed), i), 0});
  }
  return out;
}

std::vector<EnvPoint> DrivingSystem::all_points() const {
  if (!is_finite()) throw PreconditionError("all_points() needs a finite driving system");
  std::vector<EnvPoint> out;
  for (std::size_t i = 0; i < sigma_.size(); ++i) out.push_back(EnvPoint{i, 0, 0});
  return out;
}

DrivingSystem DrivingSystem::power(int k) const {
  if (k < 1) throw PreconditionError("driving power must be positive");
  if (!is_finite()) return bernoulli_shift(p_, window_, seed_, step_ * k);
  std::vector<std::size_t> table(sigma_.size());
  for (std::size_t i = 0; i < sigma_.size(); ++i) table[i] = advance(EnvPoint{i, 0, 0}, k).index;
  return finite_permutation(std::move(table), p_);
}

double DrivingSystem::cylinder_probability(const Cylinder& c) const {
  if (is_finite()) throw PreconditionError("cylinders are defined for the Bernoulli shift");
  double prob = 1.0;
  for (int s : c.symbols) {
    if (s < 0 || static_cast<std::size_t>(s) >= p_.size()) return 0.0;
    prob *= p_[static_cast<std::size_t>(s)];
  }
  return prob;
}

double DrivingSystem::cylinder_joint_probability(const Cylinder& c1, const Cylinder& c2, std::int64_t n) const {
  if (is_finite()) throw PreconditionError("cylinders are defined for the Bernoulli shift");
  std::map<std::int64_t, int> constraints;
  for (std::size_t i = 0; i < c1.symbols.size(); ++i) {
    constraints[c1.first + static_cast<std::int64_t>(i)] = c1.symbols[i];
  }
  const std::int64_t shift = n * step_;
  for (std::size_t i = 0; i < c2.symbols.size(); ++i) {
    const std::int64_t coord = c2.first + static_cast<std::int64_t>(i) + shift;
    auto [it, inserted] = constraints.emplace(coord, c2.symbols[i]);
    if (!inserted && it->second != c2.symbols[i]) return 0.0;
  }
  double prob = 1.0;
  for (const auto& [coord, s] : constraints) {
    if (s < 0 || static_cast<std::size_t>(s) >= p_.size()) return 0.0;
    prob *= p_[static_cast<std::size_t>(s)];
  }
  return prob;
}

bool DrivingSystem::in_cylinder(const EnvPoint& omega, const Cylinder& c) const {
  for (std::size_t i = 0; i < c.symbols.size(); ++i) {
    if (symbol(omega, c.first + static_cast<std::int64_t>(i)) != c.symbols[i]) return false;
  }
  return true;
}

}  // namespace cocyclelab
