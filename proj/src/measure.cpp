#include "cocyclelab/measure.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cocyclelab/errors.hpp"

namespace cocyclelab {

namespace {

Eigen::Index idx(std::size_t i) { return static_cast<Eigen::Index>(i); }

void check_cells(const FiniteMeasureSpace& space, std::span<const std::size_t> cells) {
  for (auto c : cells) {
    if (c >= space.size()) {
      throw DimensionError("cell index " + std::to_string(c) + " out of range for " +
                           std::to_string(space.size()) + " cells");
    }
  }
}

}  // namespace

std::shared_ptr<const FiniteMeasureSpace> FiniteMeasureSpace::uniform(std::size_t cells) {
  if (cells == 0) throw InvariantError("cell count", "a measure space needs at least one cell");
  Eigen::VectorXd w = Eigen::VectorXd::Constant(idx(cells), 1.0 / static_cast<double>(cells));
  return std::shared_ptr<const FiniteMeasureSpace>(new FiniteMeasureSpace(std::move(w), true, cells, 1));
}

std::shared_ptr<const FiniteMeasureSpace> FiniteMeasureSpace::grid(std::size_t nx, std::size_t ny) {
  if (nx == 0 || ny == 0) throw InvariantError("cell count", "grid dimensions must be positive");
  const std::size_t cells = nx * ny;
  Eigen::VectorXd w = Eigen::VectorXd::Constant(idx(cells), 1.0 / static_cast<double>(cells));
  return std::shared_ptr<const FiniteMeasureSpace>(new FiniteMeasureSpace(std::move(w), true, nx, ny));
}

std::shared_ptr<const FiniteMeasureSpace> FiniteMeasureSpace::weighted(std::vector<double> weights) {
  if (weights.empty()) throw InvariantError("cell count", "a measure space needs at least one cell");
  double sum = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (!(weights[i] > 0.0)) {
      throw InvariantError("weights positive", "weight of cell " + std::to_string(i) + " is not positive");
    }
    sum += weights[i];
  }
  if (std::abs(sum - 1.0) > kExactTol) {
    throw InvariantError("weights sum", "weights sum to " + std::to_string(sum) + ", expected 1");
  }
  const bool uniform = std::all_of(weights.begin(), weights.end(),
                                   [&](double w) { return w == weights.front(); });
  Eigen::VectorXd w = Eigen::Map<const Eigen::VectorXd>(weights.data(), idx(weights.size()));
  const auto n = weights.size();
  return std::shared_ptr<const FiniteMeasureSpace>(new FiniteMeasureSpace(std::move(w), uniform, n, 1));
}

double FiniteMeasureSpace::measure(std::span<const std::size_t> cells) const {
  check_cells(*this, cells);
  double m = 0.0;
  for (auto c : cells) m += weights_[idx(c)];
  return m;
}

void require_same_space(const SpacePtr& a, const SpacePtr& b, const char* what) {
  if (!a || !b) throw DimensionError(std::string(what) + ": missing measure space");
  if (a == b) return;
  if (a->size() != b->size() || a->weights() != b->weights()) {
    throw DimensionError(std::string(what) + ": operands live on different measure spaces (" +
                         std::to_string(a->size()) + " vs " + std::to_string(b->size()) + " cells)");
  }
}

// ---------------------------------------------------------------- Density

Density::Density(SpacePtr space, Eigen::VectorXd values)
    : space_(std::move(space)), values_(std::move(values)) {
  if (!space_) throw DimensionError("density without a measure space");
  if (static_cast<std::size_t>(values_.size()) != space_->size()) {
    throw DimensionError("density has " + std::to_string(values_.size()) + " values for " +
                         std::to_string(space_->size()) + " cells");
  }
}

Density Density::from_mass(SpacePtr space, const Eigen::VectorXd& mass) {
  if (static_cast<std::size_t>(mass.size()) != space->size()) {
    throw DimensionError("mass vector length does not match the space");
  }
  Eigen::VectorXd v = mass.cwiseQuotient(space->weights());
  return Density(std::move(space), std::move(v));
}

Density Density::uniform(SpacePtr space) {
  const auto n = idx(space->size());
  return Density(std::move(space), Eigen::VectorXd::Ones(n));
}

Density Density::point_mass(SpacePtr space, std::size_t cell) {
  const std::size_t c[] = {cell};
  return normalized_indicator(std::move(space), c);
}

Density Density::normalized_indicator(SpacePtr space, std::span<const std::size_t> cells) {
  const double m = space->measure(cells);
  if (!(m > 0.0)) throw PreconditionError("normalized indicator of an empty cell set");
  Eigen::VectorXd v = Eigen::VectorXd::Zero(idx(space->size()));
  for (auto c : cells) v[idx(c)] = 1.0 / m;
  return Density(std::move(space), std::move(v));
}

Eigen::VectorXd Density::mass() const { return values_.cwiseProduct(space_->weights()); }

double Density::total_mass() const { return values_.dot(space_->weights()); }

double Density::l1_norm() const { return values_.cwiseAbs().dot(space_->weights()); }

bool Density::is_probability(double tol) const {
  return values_.minCoeff() >= -tol && std::abs(total_mass() - 1.0) <= tol;
}

bool Density::is_zero_mean(double tol) const { return std::abs(total_mass()) <= tol; }

Density Density::operator-(const Density& other) const {
  require_same_space(space_, other.space_, "density difference");
  return Density(space_, values_ - other.values_);
}

Density Density::operator+(const Density& other) const {
  require_same_space(space_, other.space_, "density sum");
  return Density(space_, values_ + other.values_);
}

Density Density::operator*(double s) const { return Density(space_, values_ * s); }

// ------------------------------------------------------------- Observable

Observable::Observable(SpacePtr space, Eigen::VectorXd values)
    : space_(std::move(space)), values_(std::move(values)) {
  if (!space_) throw DimensionError("observable without a measure space");
  if (static_cast<std::size_t>(values_.size()) != space_->size()) {
    throw DimensionError("observable has " + std::to_string(values_.size()) + " values for " +
                         std::to_string(space_->size()) + " cells");
  }
}

Observable Observable::constant(SpacePtr space, double c) {
  const auto n = idx(space->size());
  return Observable(std::move(space), Eigen::VectorXd::Constant(n, c));
}

Observable Observable::indicator(SpacePtr space, std::span<const std::size_t> cells) {
  check_cells(*space, cells);
  Eigen::VectorXd v = Eigen::VectorXd::Zero(idx(space->size()));
  for (auto c : cells) v[idx(c)] = 1.0;
  return Observable(std::move(space), std::move(v));
}

Observable Observable::cell_indicator(SpacePtr space, std::size_t cell) {
  const std::size_t c[] = {cell};
  return indicator(std::move(space), c);
}

double Observable::sup_norm() const { return values_.size() == 0 ? 0.0 : values_.cwiseAbs().maxCoeff(); }

// ----------------------------------------------------------- MarkovMatrix

MarkovMatrix::MarkovMatrix(SpacePtr space, Kernel kernel, Representation rep)
    : space_(std::move(space)), kernel_(std::move(kernel)), rep_(rep) {
  if (!space_) throw DimensionError("Markov matrix without a measure space");
  const auto n = idx(space_->size());
  if (kernel_.rows() != n || kernel_.cols() != n) {
    throw DimensionError("kernel shape does not match the space");
  }
  kernel_.makeCompressed();
  const auto report = markov_check(*this);
  if (report.min_entry < 0.0) {
    throw InvariantError("kernel nonnegative", "kernel has a negative entry " + std::to_string(report.min_entry));
  }
  if (!report.passed) {
    throw InvariantError("row sums", "kernel row sum deviates from 1 by " +
                                         std::to_string(report.max_row_deviation));
  }
}

MarkovMatrix MarkovMatrix::unchecked(SpacePtr space, Kernel kernel, Representation rep) {
  kernel.makeCompressed();
  return MarkovMatrix(Unchecked{}, std::move(space), std::move(kernel), rep);
}

MarkovMatrix MarkovMatrix::identity(SpacePtr space) {
  const auto n = idx(space->size());
  Kernel k(n, n);
  k.setIdentity();
  return MarkovMatrix(Unchecked{}, std::move(space), std::move(k), Representation::exact);
}

MarkovMatrix MarkovMatrix::from_dense(SpacePtr space, const Eigen::MatrixXd& dense, Representation rep) {
  Kernel k = dense.sparseView(0.0, 0.0);
  return MarkovMatrix(std::move(space), std::move(k), rep);
}

bool MarkovMatrix::is_cell_map() const {
  for (Eigen::Index i = 0; i < kernel_.outerSize(); ++i) {
    int nonzero = 0;
    for (Kernel::InnerIterator it(kernel_, i); it; ++it) {
      if (it.value() == 0.0) continue;
      if (std::abs(it.value() - 1.0) > 1e-9) return false;
      ++nonzero;
    }
    if (nonzero != 1) return false;
  }
  return true;
}

MarkovMatrix MarkovMatrix::then(const MarkovMatrix& next) const {
  require_same_space(space_, next.space_, "operator composition");
  Kernel k = (kernel_ * next.kernel_).pruned(0.0, 0.0);
  const auto rep = (rep_ == Representation::exact && next.rep_ == Representation::exact)
                       ? Representation::exact
                       : Representation::approximate;
  return MarkovMatrix(Unchecked{}, space_, std::move(k), rep);
}

// ------------------------------------------------------------- operations

double integrate(const Density& f, const Observable& g) {
  require_same_space(f.space(), g.space(), "integrate");
  return f.values().cwiseProduct(g.values()).dot(f.space()->weights());
}

Density apply(const MarkovMatrix& p, const Density& f) {
  require_same_space(p.space(), f.space(), "apply");
  Eigen::VectorXd mass = (f.mass().transpose() * p.kernel()).transpose();
  return Density::from_mass(f.space(), mass);
}

Observable dual_apply(const MarkovMatrix& p, const Observable& g) {
  require_same_space(p.space(), g.space(), "dual_apply");
  Eigen::VectorXd v = p.kernel() * g.values();
  return Observable(g.space(), std::move(v));
}

MarkovCheck markov_check(const MarkovMatrix& p, double tol) {
  MarkovCheck report;
  const Kernel& k = p.kernel();
  double min_entry = 0.0;
  bool any_entry = false;
  for (Eigen::Index i = 0; i < k.outerSize(); ++i) {
    double sum = 0.0;
    for (Kernel::InnerIterator it(k, i); it; ++it) {
      sum += it.value();
      if (!any_entry || it.value() < min_entry) min_entry = it.value();
      any_entry = true;
    }
    report.max_row_deviation = std::max(report.max_row_deviation, std::abs(sum - 1.0));
  }
  // Implicit zeros count as entries whenever some row is not full.
  if (k.nonZeros() < k.rows() * k.cols()) min_entry = std::min(min_entry, 0.0);
  report.min_entry = min_entry;
  report.passed = report.max_row_deviation <= tol && report.min_entry >= 0.0;
  return report;
}

void prune_zeros(MassBlock& block) {
  block.prune([](Eigen::Index, Eigen::Index, double v) { return v != 0.0; });
}

MassBlock mass_block(std::span<const Density> densities) {
  if (densities.empty()) return MassBlock();
  const auto n = idx(densities.front().size());
  std::vector<Eigen::Triplet<double>> triplets;
  for (std::size_t r = 0; r < densities.size(); ++r) {
    const auto mass = densities[r].mass();
    if (mass.size() != n) throw DimensionError("mass block rows of different lengths");
    for (Eigen::Index j = 0; j < n; ++j) {
      if (mass[j] != 0.0) triplets.emplace_back(idx(r), j, mass[j]);
    }
  }
  MassBlock block(idx(densities.size()), n);
  block.setFromTriplets(triplets.begin(), triplets.end());
  return block;
}

std::vector<double> row_l1_norms(const MassBlock& block) {
  std::vector<double> out(static_cast<std::size_t>(block.rows()), 0.0);
  for (Eigen::Index i = 0; i < block.outerSize(); ++i) {
    double s = 0.0;
    for (MassBlock::InnerIterator it(block, i); it; ++it) s += std::abs(it.value());
    out[static_cast<std::size_t>(i)] = s;
  }
  return out;
}

}  // namespace cocyclelab
