#include "cocyclelab/cocycle.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cocyclelab/errors.hpp"

namespace cocyclelab {

CocycleFamily::CocycleFamily(DrivingPtr driving, SpacePtr space, std::vector<MatrixPtr> table)
    : driving_(std::move(driving)), space_(std::move(space)), table_(std::move(table)) {
  if (!driving_ || !space_) throw PreconditionError("cocycle needs a driving system and a space");
  if (table_.size() != driving_->feature_count()) {
    throw InvariantError("table complete", "operator table has " + std::to_string(table_.size()) +
                                               " entries, driving has " +
                                               std::to_string(driving_->feature_count()) + " feature values");
  }
  for (std::size_t v = 0; v < table_.size(); ++v) {
    if (!table_[v]) throw InvariantError("table complete", "missing operator for feature " + std::to_string(v));
    require_same_space(space_, table_[v]->space(), "cocycle table");
    if (!markov_check(*table_[v]).passed) {
      throw InvariantError("markov_check", "operator for feature " + std::to_string(v) + " is not Markov");
    }
  }
  homogeneous_ = std::all_of(table_.begin(), table_.end(), [&](const MatrixPtr& p) {
    return p == table_.front() || p->kernel().isApprox(table_.front()->kernel(), 0.0);
  });
}

CocycleFamily CocycleFamily::constant(DrivingPtr driving, MatrixPtr p) {
  const auto space = p->space();
  std::vector<MatrixPtr> table(driving->feature_count(), p);
  return CocycleFamily(std::move(driving), space, std::move(table));
}

const MarkovMatrix& CocycleFamily::at(const EnvPoint& omega) const {
  return *table_[driving_->feature(omega)];
}

bool CocycleFamily::all_cell_maps() const {
  return std::all_of(table_.begin(), table_.end(), [](const MatrixPtr& p) { return p->is_cell_map(); });
}

MarkovMatrix compose(const CocycleFamily& c, const EnvPoint& omega, int n) {
  if (n < 0) throw PreconditionError("compose needs n >= 0");
  MarkovMatrix acc = MarkovMatrix::identity(c.space());
  EnvPoint w = omega;
  for (int k = 0; k < n; ++k) {
    acc = acc.then(c.at(w));
    w = c.driving().advance(w, 1);
  }
  return acc;
}

MassBlock push(const CocycleFamily& c, const EnvPoint& omega, int n, MassBlock block) {
  EnvPoint w = omega;
  for (int k = 0; k < n; ++k) {
    block = block * c.at(w).kernel();
    prune_zeros(block);
    w = c.driving().advance(w, 1);
  }
  return block;
}

Eigen::VectorXd push_mass(const CocycleFamily& c, const EnvPoint& omega, int n, Eigen::VectorXd mass) {
  EnvPoint w = omega;
  for (int k = 0; k < n; ++k) {
    mass = (mass.transpose() * c.at(w).kernel()).transpose();
    w = c.driving().advance(w, 1);
  }
  return mass;
}

Density push(const CocycleFamily& c, const EnvPoint& omega, int n, const Density& f) {
  require_same_space(c.space(), f.space(), "push");
  return Density::from_mass(f.space(), push_mass(c, omega, n, f.mass()));
}

Observable dual_push(const CocycleFamily& c, const EnvPoint& omega, int n, const Observable& g) {
  require_same_space(c.space(), g.space(), "dual_push");
  // Innermost factor acts first: apply P*_{sigma^{n-1} omega} ... P*_omega.
  Eigen::VectorXd v = g.values();
  for (int k = n - 1; k >= 0; --k) {
    v = c.at(c.driving().advance(omega, k)).kernel() * v;
  }
  return Observable(g.space(), std::move(v));
}

// --------------------------------------------------------------- pullback

PullbackResult invariant_density_pullback(const CocycleFamily& c, const EnvPoint& omega, int K, const Density& f0) {
  if (K < 1) throw PreconditionError("pullback horizon must be at least 1");
  if (!c.driving().is_invertible()) throw UnsupportedError("pullback needs an invertible driving system");
  if (!f0.is_probability(1e-9)) throw PreconditionError("pullback start must be a probability density");
  const auto& d = c.driving();
  const Density full = push(c, d.advance(omega, -K), K, f0);
  const Density prev = push(c, d.advance(omega, -(K - 1)), K - 1, f0);
  return PullbackResult{full, (full - prev).l1_norm(), K, false};
}

PullbackResult invariant_density_auto(const CocycleFamily& c, const EnvPoint& omega, const PullbackOptions& opts) {
  const Density f0 = opts.start ? *opts.start : Density::uniform(c.space());
  if (c.is_homogeneous()) {
    // P^(K) does not depend on omega: iterate forward once.
    Eigen::VectorXd prev = f0.mass();
    const auto& k = c.table().front()->kernel();
    for (int K = 1; K <= opts.max_horizon; ++K) {
      Eigen::VectorXd next = (prev.transpose() * k).transpose();
      const double inc = (next - prev).cwiseAbs().sum();
      prev = std::move(next);
      if (inc < opts.tolerance || K == opts.max_horizon) {
        return PullbackResult{Density::from_mass(c.space(), prev), inc, K, inc < opts.tolerance};
      }
    }
  }
  PullbackResult last{f0, 0.0, 0, false};
  for (int K = 1; K <= opts.max_horizon; ++K) {
    last = invariant_density_pullback(c, omega, K, f0);
    if (last.increment < opts.tolerance) {
      last.converged = true;
      return last;
    }
  }
  return last;
}

InvariantDensityMap InvariantDensityMap::build(std::shared_ptr<const CocycleFamily> c,
                                               const std::vector<EnvPoint>& samples, PullbackOptions opts) {
  InvariantDensityMap map;
  map.cocycle_ = c;
  map.opts_ = opts;
  auto record = [&](const PullbackResult& r) {
    map.table_.push_back(r.density);
    map.horizon_ = std::max(map.horizon_, r.horizon);
    map.max_increment_ = std::max(map.max_increment_, r.increment);
    map.converged_ = map.converged_ && r.converged;
  };
  if (c->is_homogeneous()) {
    record(invariant_density_auto(*c, samples.empty() ? EnvPoint{} : samples.front(), opts));
  } else if (c->driving().is_finite()) {
    for (const auto& w : c->driving().all_points()) record(invariant_density_auto(*c, w, opts));
  } else {
    map.on_demand_ = true;
    for (const auto& w : samples) {
      const auto r = invariant_density_auto(*c, w, opts);
      map.horizon_ = std::max(map.horizon_, r.horizon);
      map.max_increment_ = std::max(map.max_increment_, r.increment);
      map.converged_ = map.converged_ && r.converged;
    }
  }
  map.measure_residual(samples);
  return map;
}

InvariantDensityMap InvariantDensityMap::from_table(std::shared_ptr<const CocycleFamily> c, std::vector<Density> table,
                                                    const std::vector<EnvPoint>& samples) {
  InvariantDensityMap map;
  map.cocycle_ = std::move(c);
  const std::size_t expected = map.cocycle_->is_homogeneous() && table.size() == 1
                                   ? 1
                                   : map.cocycle_->driving().is_finite() ? map.cocycle_->driving().point_count() : 0;
  if (expected == 0 || table.size() != expected) {
    throw PreconditionError("invariant density table does not match the driving system");
  }
  for (const auto& h : table) {
    if (!h.is_probability(1e-9)) throw InvariantError("density", "invariant density table entry is not in D(X,m)");
  }
  map.table_ = std::move(table);
  map.measure_residual(samples);
  return map;
}

void InvariantDensityMap::measure_residual(const std::vector<EnvPoint>& samples) {
  residual_ = 0.0;
  for (const auto& w : samples) {
    const Density moved = apply(cocycle_->at(w), at(w));
    residual_ = std::max(residual_, (moved - at(cocycle_->driving().advance(w, 1))).l1_norm());
  }
}

Density InvariantDensityMap::at(const EnvPoint& omega) const {
  if (table_.size() == 1 && !on_demand_) return table_.front();
  if (!on_demand_) return table_.at(omega.index);
  return invariant_density_auto(*cocycle_, omega, opts_).density;
}

// ------------------------------------------------------------- normalized

std::vector<std::size_t> support(const Eigen::VectorXd& values, double floor_fraction) {
  std::vector<std::size_t> out;
  if (values.size() == 0) return out;
  const double floor = floor_fraction * values.cwiseAbs().maxCoeff();
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    if (std::abs(values[i]) > floor) out.push_back(static_cast<std::size_t>(i));
  }
  return out;
}

double weighted_integral(const Density& h, const Eigen::VectorXd& f) { return h.mass().dot(f); }

NormalizedResult normalized_apply(const NormalizedCocycle& nc, const EnvPoint& omega, const Eigen::VectorXd& f) {
  const auto& c = nc.base();
  const Density h = nc.densities().at(omega);
  const Density h_next = nc.densities().at(c.driving().advance(omega, 1));
  if (static_cast<std::size_t>(f.size()) != c.size()) throw DimensionError("normalized_apply: wrong length");
  const Density moved = apply(c.at(omega), Density(c.space(), f.cwiseProduct(h.values())));
  const double floor = nc.floor_fraction() * h_next.values().cwiseAbs().maxCoeff();
  const double moved_floor = nc.floor_fraction() * std::max(1.0, moved.values().cwiseAbs().maxCoeff());

  NormalizedResult out{Eigen::VectorXd::Zero(f.size()), {}};
  for (Eigen::Index i = 0; i < f.size(); ++i) {
    if (h_next.values()[i] > floor) {
      out.values[i] = moved.values()[i] / h_next.values()[i];
    } else if (std::abs(moved.values()[i]) > moved_floor) {
      out.excluded.push_back(static_cast<std::size_t>(i));
    }
  }
  return out;
}

double support_defect(const CocycleFamily& c, const InvariantDensityMap& h, const EnvPoint& omega, int n,
                      double floor_fraction) {
  if (n < 0) throw PreconditionError("support_defect needs n >= 0");
  const Eigen::VectorXd ones = push(c, omega, n, Density::uniform(c.space())).values();
  const Eigen::VectorXd pushed_h = push(c, omega, n, h.at(omega)).values();
  const double floor_ones = floor_fraction * ones.cwiseAbs().maxCoeff();
  const double floor_h = floor_fraction * pushed_h.cwiseAbs().maxCoeff();
  double defect = 0.0;
  for (Eigen::Index i = 0; i < ones.size(); ++i) {
    if (ones[i] > floor_ones && !(pushed_h[i] > floor_h)) defect += c.space()->weight(static_cast<std::size_t>(i));
  }
  return defect;
}

}  // namespace cocyclelab
