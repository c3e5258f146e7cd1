#include "cocyclelab/mixing.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cocyclelab/errors.hpp"
#include "cocyclelab/parallel.hpp"
#include "cocyclelab/transfer.hpp"

namespace cocyclelab {

namespace {

Eigen::Index idx(std::size_t i) { return static_cast<Eigen::Index>(i); }

void require_zero_mean(const Density& f) {
  if (!f.is_zero_mean(1e-12)) {
    throw PreconditionError("f must lie in L1_0 (total mass " + std::to_string(f.total_mass()) + ")");
  }
}

/// Columns are the observables; rows are cells.
Eigen::SparseMatrix<double> observable_columns(const std::vector<const Observable*>& gs, std::size_t cells) {
  std::vector<Eigen::Triplet<double>> triplets;
  for (std::size_t k = 0; k < gs.size(); ++k) {
    const auto& v = gs[k]->values();
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      if (v[i] != 0.0) triplets.emplace_back(i, idx(k), v[i]);
    }
  }
  Eigen::SparseMatrix<double> m(idx(cells), idx(gs.size()));
  m.setFromTriplets(triplets.begin(), triplets.end());
  return m;
}

struct OmegaCurves {
  std::vector<double> values;  // [(f * G + g) * (H + 1) + n]; dropped unless requested
  std::vector<RateFit> rates;
  std::vector<int> thresholds; // per (f, g)
  std::vector<double> envelope;
  double tail_max = 0.0;
};

}  // namespace

const char* to_string(Notion notion) {
  switch (notion) {
    case Notion::prior_hom: return "prior-hom";
    case Notion::post_hom: return "post-hom";
    case Notion::prior_inhom: return "prior-inhom";
    case Notion::post_inhom: return "post-inhom";
  }
  return "unknown";
}

Notion parse_notion(const std::string& text) {
  for (Notion n : {Notion::prior_hom, Notion::post_hom, Notion::prior_inhom, Notion::post_inhom}) {
    if (text == to_string(n)) return n;
  }
  throw PreconditionError("unknown mixing notion '" + text + "'");
}

bool is_prior(Notion n) { return n == Notion::prior_hom || n == Notion::prior_inhom; }
bool is_homogeneous(Notion n) { return n == Notion::prior_hom || n == Notion::post_hom; }

// ---------------------------------------------------------- ObservableMap

ObservableMap ObservableMap::homogeneous(Observable g) {
  return ObservableMap(Mode::homogeneous, nullptr, {std::move(g)});
}

ObservableMap ObservableMap::step(DrivingPtr driving, std::vector<Observable> per_feature) {
  if (per_feature.size() != driving->feature_count()) {
    throw PreconditionError("step map needs one observable per feature value");
  }
  for (const auto& g : per_feature) require_same_space(per_feature.front().space(), g.space(), "step map");
  return ObservableMap(Mode::step, std::move(driving), std::move(per_feature));
}

ObservableMap ObservableMap::orbit_schedule(DrivingPtr driving, EnvPoint base, std::vector<Observable> schedule) {
  if (schedule.empty()) throw PreconditionError("orbit schedule is empty");
  return ObservableMap(Mode::orbit, std::move(driving), std::move(schedule), base);
}

const Observable& ObservableMap::at(const EnvPoint& omega) const {
  switch (mode_) {
    case Mode::homogeneous: return values_.front();
    case Mode::step: return values_[driving_->feature(omega)];
    case Mode::orbit: {
      EnvPoint w = base_;
      for (std::size_t n = 0; n < values_.size(); ++n) {
        if (w == omega) return values_[n];
        w = driving_->advance(w, 1);
      }
      throw ScheduleError("orbit-schedule observable queried off its orbit");
    }
  }
  throw ScheduleError("unknown observable map mode");
}

double ObservableMap::sup_norm() const {
  double s = 0.0;
  for (const auto& g : values_) s = std::max(s, g.sup_norm());
  return s;
}

// ----------------------------------------------------------- correlations

double correlation_hom(const CocycleFamily& c, const EnvPoint& omega, const Density& f, const Observable& g, int n) {
  require_zero_mean(f);
  return integrate(push(c, omega, n, f), g);
}

double correlation_inhom(const CocycleFamily& c, const EnvPoint& omega, const Density& f, const ObservableMap& g,
                         int n) {
  require_zero_mean(f);
  const Observable& gn = g.at(c.driving().advance(omega, n));
  return integrate(push(c, omega, n, f), gn);
}

std::vector<Density> difference_basis(const SpacePtr& space) {
  std::vector<Density> out;
  const std::size_t n = space->size();
  for (std::size_t i = 0; i + 1 < n; ++i) {
    Eigen::VectorXd mass = Eigen::VectorXd::Zero(idx(n));
    mass[idx(i)] = 0.5;
    mass[idx(i + 1)] = -0.5;
    out.push_back(Density::from_mass(space, mass));
  }
  return out;
}

MassBlock difference_block(const SpacePtr& space) {
  const std::size_t n = space->size();
  std::vector<Eigen::Triplet<double>> triplets;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    triplets.emplace_back(idx(i), idx(i), 0.5);
    triplets.emplace_back(idx(i), idx(i + 1), -0.5);
  }
  MassBlock block(idx(n > 0 ? n - 1 : 0), idx(n));
  block.setFromTriplets(triplets.begin(), triplets.end());
  return block;
}

std::vector<Observable> indicator_basis(const SpacePtr& space) {
  std::vector<Observable> out;
  for (std::size_t i = 0; i < space->size(); ++i) out.push_back(Observable::cell_indicator(space, i));
  return out;
}

std::vector<ObservableMap> homogeneous_maps(const std::vector<Observable>& basis) {
  std::vector<ObservableMap> out;
  for (const auto& g : basis) out.push_back(ObservableMap::homogeneous(g));
  return out;
}

std::vector<ObservableMap> step_indicator_maps(const DrivingPtr& driving, const SpacePtr& space) {
  std::vector<ObservableMap> out;
  const std::size_t features = driving->feature_count();
  for (std::size_t v = 0; v < features; ++v) {
    for (std::size_t j = 0; j < space->size(); ++j) {
      std::vector<Observable> per(features, Observable::zero(space));
      per[v] = Observable::cell_indicator(space, j);
      out.push_back(ObservableMap::step(driving, std::move(per)));
    }
  }
  return out;
}

// -------------------------------------------------------------- rate fits

int tail_start(int horizon) {
  const int window = std::max(1, static_cast<int>(std::ceil(0.1 * static_cast<double>(horizon))));
  return std::max(0, horizon - window + 1);
}

RateFit fit_geometric_rate(std::span<const double> curve, double relative_floor) {
  RateFit fit;
  if (curve.empty()) return fit;
  std::size_t peak = 0;
  for (std::size_t n = 1; n < curve.size(); ++n) {
    if (std::abs(curve[n]) > std::abs(curve[peak])) peak = n;
  }
  const double top = std::abs(curve[peak]);
  if (top == 0.0) return fit;
  const double floor = relative_floor * top;
  std::vector<double> xs;
  std::vector<double> ys;
  for (std::size_t n = peak; n < curve.size(); ++n) {
    if (!(std::abs(curve[n]) > floor)) break;
    xs.push_back(static_cast<double>(n));
    ys.push_back(std::log(std::abs(curve[n])));
  }
  fit.points = static_cast<int>(xs.size());
  if (xs.size() < 2) {
    // Collapsed immediately after the peak, or the peak is the last sample.
    fit.rate = (peak + 1 < curve.size()) ? 0.0 : 1.0;
    fit.log_c = std::log(top);
    return fit;
  }
  const double k = static_cast<double>(xs.size());
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / k;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / k;
  double sxx = 0.0;
  double sxy = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  const double slope = sxy / sxx;
  fit.rate = std::exp(slope);
  fit.log_c = my - slope * mx;
  fit.r_squared = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return fit;
}

// -------------------------------------------------------------- estimator

MixingReport estimate_mixing(const CocycleFamily& c, Notion notion, const std::vector<Density>& f_basis,
                             const std::vector<ObservableMap>& g_basis, const std::vector<EnvPoint>& omegas,
                             const MixingOptions& opts) {
  if (f_basis.empty() || g_basis.empty()) throw PreconditionError("estimate_mixing needs nonempty bases");
  if (omegas.empty()) throw PreconditionError("estimate_mixing needs at least one omega sample");
  if (opts.horizon < 1) throw PreconditionError("horizon must be at least 1");
  for (const auto& f : f_basis) {
    require_same_space(c.space(), f.space(), "estimate_mixing");
    require_zero_mean(f);
  }
  if (is_homogeneous(notion)) {
    for (const auto& g : g_basis) {
      if (!g.is_homogeneous()) throw PreconditionError("homogeneous notion given an inhomogeneous observable map");
    }
  }

  const int H = opts.horizon;
  const std::size_t steps = static_cast<std::size_t>(H) + 1;
  const std::size_t F = f_basis.size();
  const std::size_t G = g_basis.size();
  const int tail = tail_start(H);
  const MassBlock start = mass_block(f_basis);

  std::vector<OmegaCurves> per_omega(omegas.size());
  parallel_for(omegas.size(), opts.workers, [&](std::size_t oi) {
    OmegaCurves& out = per_omega[oi];
    out.values.assign(F * G * steps, 0.0);
    out.envelope.assign(steps, 0.0);
    MassBlock block = start;
    EnvPoint w = omegas[oi];
    std::vector<const Observable*> gs(G);
    Eigen::SparseMatrix<double> cols;
    for (std::size_t n = 0; n < steps; ++n) {
      // Homogeneous maps resolve identically at every point.
      if (n == 0 || !is_homogeneous(notion)) {
        for (std::size_t k = 0; k < G; ++k) gs[k] = &g_basis[k].at(w);
        cols = observable_columns(gs, c.size());
      }
      const Eigen::SparseMatrix<double, Eigen::RowMajor> corr = block * cols;
      for (Eigen::Index f = 0; f < corr.outerSize(); ++f) {
        for (decltype(corr)::InnerIterator it(corr, f); it; ++it) {
          const std::size_t slot = (static_cast<std::size_t>(f) * G + static_cast<std::size_t>(it.col())) * steps + n;
          out.values[slot] = it.value();
          out.envelope[n] = std::max(out.envelope[n], std::abs(it.value()));
        }
      }
      if (n + 1 < steps) {
        block = block * c.at(w).kernel();
        prune_zeros(block);
        w = c.driving().advance(w, 1);
      }
    }
    out.thresholds.assign(F * G, 0);
    for (std::size_t pair = 0; pair < F * G; ++pair) {
      const double* curve = &out.values[pair * steps];
      int threshold = 0;
      for (std::size_t n = 0; n < steps; ++n) {
        if (!(std::abs(curve[n]) < opts.tol)) threshold = static_cast<int>(n) + 1;
        if (static_cast<int>(n) >= tail) out.tail_max = std::max(out.tail_max, std::abs(curve[n]));
      }
      out.thresholds[pair] = threshold;
      if (opts.per_curve_rates) out.rates.push_back(fit_geometric_rate(std::span<const double>(curve, steps)));
    }
    if (!opts.keep_curves && !opts.sink) std::vector<double>().swap(out.values);
  });

  MixingReport report;
  report.notion = notion;
  report.horizon = H;
  report.tol = opts.tol;
  report.tail_start = tail;
  report.f_count = F;
  report.g_count = G;
  report.omega_count = omegas.size();
  report.envelope.assign(steps, 0.0);
  if (is_prior(notion)) {
    report.omega_thresholds.assign(omegas.size(), 0);
  } else {
    report.pair_thresholds.assign(F * G, 0);
  }

  for (std::size_t oi = 0; oi < omegas.size(); ++oi) {
    auto& oc = per_omega[oi];
    report.tail_max = std::max(report.tail_max, oc.tail_max);
    for (std::size_t n = 0; n < steps; ++n) report.envelope[n] = std::max(report.envelope[n], oc.envelope[n]);
    for (std::size_t pair = 0; pair < F * G; ++pair) {
      const int t = oc.thresholds[pair];
      if (is_prior(notion)) {
        report.omega_thresholds[oi] = std::max(report.omega_thresholds[oi], t);
      } else {
        report.pair_thresholds[pair] = std::max(report.pair_thresholds[pair], t);
      }
      if (opts.per_curve_rates) report.curve_rates.push_back(oc.rates[pair]);
      if (oc.values.empty()) continue;
      const std::span<const double> curve(&oc.values[pair * steps], steps);
      if (opts.keep_curves) report.curves.emplace_back(curve.begin(), curve.end());
      if (opts.sink) opts.sink(CurveKey{oi, pair / G, pair % G}, curve);
    }
    oc = OmegaCurves{};
  }
  const auto& thresholds = is_prior(notion) ? report.omega_thresholds : report.pair_thresholds;
  report.decayed = std::all_of(thresholds.begin(), thresholds.end(), [&](int t) { return t <= tail; });
  report.envelope_rate = fit_geometric_rate(report.envelope);
  report.envelope_monotone_tail = true;
  for (std::size_t n = static_cast<std::size_t>(tail) + 1; n < steps; ++n) {
    if (report.envelope[n] > report.envelope[n - 1]) report.envelope_monotone_tail = false;
  }
  return report;
}

// --------------------------------------------------------- counterexample

CounterexampleReport orbit_counterexample(int k, int horizon) {
  if (k < 2) throw PreconditionError("counterexample needs k >= 2");
  if (horizon < 1) throw PreconditionError("counterexample horizon must be positive");
  if (horizon > 2 * k) {
    throw HorizonError("horizon " + std::to_string(horizon) + " exceeds the period 2k = " + std::to_string(2 * k) +
                       " of the symbolic baker model");
  }
  const int bits = 2 * k;
  const auto space = FiniteMeasureSpace::uniform(std::size_t{1} << bits);
  const auto baker = std::make_shared<const MarkovMatrix>(pf_exact(MapSpec::baker_cyclic(bits), space));
  // The rotation has horizon + 1 points, so sigma^n(omega) are distinct for
  // n <= horizon and the schedule below is well defined.
  const auto driving = std::make_shared<const DrivingSystem>(
      DrivingSystem::finite_rotation(static_cast<std::size_t>(horizon) + 1));
  const CocycleFamily c = CocycleFamily::constant(driving, baker);
  const EnvPoint omega{0, 0, 0};

  const std::size_t n_cells = space->size();
  // A = {first bit = 0}: the lower half of the cells.
  Eigen::VectorXd ind_a = Eigen::VectorXd::Zero(idx(n_cells));
  ind_a.head(idx(n_cells / 2)).setOnes();
  const Eigen::VectorXd ind_ac = Eigen::VectorXd::Ones(idx(n_cells)) - ind_a;
  const Density f(space, ind_a - ind_ac);

  std::vector<Observable> schedule;
  CounterexampleReport report;
  report.k = k;
  report.horizon = horizon;
  report.cells = n_cells;
  Density la(space, ind_a);
  Density lac(space, ind_ac);
  for (int n = 0; n <= horizon; ++n) {
    schedule.emplace_back(space, la.values());
    double overlap = 0.0;
    for (std::size_t i = 0; i < n_cells; ++i) {
      if (la.value(i) != 0.0 && lac.value(i) != 0.0) overlap += space->weight(i);
    }
    report.overlap.push_back(overlap);
    report.square_integral.push_back(la.values().cwiseProduct(la.values()).dot(space->weights()));
    la = apply(*baker, la);
    lac = apply(*baker, lac);
  }
  const ObservableMap g = ObservableMap::orbit_schedule(driving, omega, std::move(schedule));
  const Observable fixed_a(space, ind_a);

  Density pushed = f;
  for (int n = 0; n <= horizon; ++n) {
    report.inhomogeneous.push_back(integrate(pushed, g.at(driving->advance(omega, n))));
    report.homogeneous_fixed_a.push_back(integrate(pushed, fixed_a));
    report.homogeneous_cell_max.push_back(pushed.mass().cwiseAbs().maxCoeff());
    pushed = apply(c.at(driving->advance(omega, n)), pushed);
  }
  report.disjoint = std::all_of(report.overlap.begin(), report.overlap.end(), [](double v) { return v == 0.0; });
  report.inhomogeneous_constant = std::all_of(report.inhomogeneous.begin(), report.inhomogeneous.end(),
                                              [](double v) { return std::abs(v - 0.5) <= 1e-12; });
  return report;
}

}  // namespace cocyclelab
