#include "cocyclelab/exactness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "cocyclelab/errors.hpp"
#include "cocyclelab/mixing.hpp"
#include "cocyclelab/parallel.hpp"

namespace cocyclelab {

namespace {

constexpr double kIndicatorTol = 1e-9;

/// Target cell of every row of a cell-map kernel.
std::vector<std::size_t> cell_targets(const Kernel& k) {
  std::vector<std::size_t> out(static_cast<std::size_t>(k.rows()));
  for (Eigen::Index i = 0; i < k.outerSize(); ++i) {
    bool found = false;
    for (Kernel::InnerIterator it(k, i); it; ++it) {
      if (std::abs(it.value() - 1.0) <= kIndicatorTol && !found) {
        out[static_cast<std::size_t>(i)] = static_cast<std::size_t>(it.col());
        found = true;
      } else if (std::abs(it.value()) > kIndicatorTol) {
        throw PreconditionError("tail partition: operator is not map-derived at this resolution (row " +
                                std::to_string(i) + ")");
      }
    }
    if (!found) {
      throw PreconditionError("tail partition: operator is not map-derived at this resolution (row " +
                              std::to_string(i) + ")");
    }
  }
  return out;
}

double tail_max_of(std::span<const double> curve, int tail) {
  double m = 0.0;
  for (std::size_t n = static_cast<std::size_t>(tail); n < curve.size(); ++n) m = std::max(m, std::abs(curve[n]));
  return m;
}

}  // namespace

NormCurves exactness_norms(const CocycleFamily& c, const EnvPoint& omega, const std::vector<Density>& f_basis,
                           int horizon, double tol, unsigned workers) {
  for (const auto& f : f_basis) require_same_space(c.space(), f.space(), "exactness_norms");
  if (f_basis.empty()) return exactness_norms(c, omega, MassBlock(0, static_cast<Eigen::Index>(c.size())), horizon, tol, workers);
  return exactness_norms(c, omega, mass_block(f_basis), horizon, tol, workers);
}

NormCurves exactness_norms(const CocycleFamily& c, const EnvPoint& omega, const MassBlock& f_basis, int horizon,
                           double tol, unsigned workers) {
  if (horizon < 0) throw PreconditionError("exactness_norms needs horizon >= 0");
  if (f_basis.cols() != static_cast<Eigen::Index>(c.size())) throw DimensionError("exactness_norms: basis length");
  const Eigen::VectorXd totals = f_basis * Eigen::VectorXd::Ones(f_basis.cols());
  if (totals.size() > 0 && totals.cwiseAbs().maxCoeff() > 1e-12) {
    throw PreconditionError("exactness_norms: basis element outside L1_0");
  }
  const auto rows = static_cast<std::size_t>(f_basis.rows());
  const std::size_t steps = static_cast<std::size_t>(horizon) + 1;
  NormCurves out;
  out.curves.assign(rows, std::vector<double>(steps, 0.0));

  const std::size_t chunks = std::max<std::size_t>(1, std::min<std::size_t>(workers, rows));
  const std::size_t per_chunk = (rows + chunks - 1) / chunks;
  parallel_for(chunks, workers, [&](std::size_t chunk) {
    const std::size_t begin = chunk * per_chunk;
    const std::size_t end = std::min(rows, begin + per_chunk);
    if (begin >= end) return;
    MassBlock block = f_basis.middleRows(static_cast<Eigen::Index>(begin), static_cast<Eigen::Index>(end - begin));
    EnvPoint w = omega;
    for (std::size_t n = 0; n < steps; ++n) {
      const auto norms = row_l1_norms(block);
      for (std::size_t r = 0; r < norms.size(); ++r) out.curves[begin + r][n] = norms[r];
      if (n + 1 < steps) {
        block = block * c.at(w).kernel();
        prune_zeros(block);
        w = c.driving().advance(w, 1);
      }
    }
  });

  const int tail = tail_start(horizon);
  for (const auto& curve : out.curves) {
    out.tail_max = std::max(out.tail_max, tail_max_of(curve, tail));
    for (std::size_t n = 1; n < curve.size(); ++n) out.max_increase = std::max(out.max_increase, curve[n] - curve[n - 1]);
  }
  out.decayed = out.tail_max < tol;
  return out;
}

DualBallCurve lin_dual_ball(const CocycleFamily& c, const EnvPoint& omega, int horizon, double tol) {
  if (horizon < 0) throw PreconditionError("lin_dual_ball needs horizon >= 0");
  const auto n_cells = static_cast<Eigen::Index>(c.size());
  const Eigen::VectorXd& m = c.space()->weights();
  DualBallCurve out;
  Kernel composed = MarkovMatrix::identity(c.space()).kernel();
  EnvPoint w = omega;
  Eigen::VectorXd col_max(n_cells), col_min(n_cells), col_mean(n_cells);
  std::vector<Eigen::Index> col_count(static_cast<std::size_t>(n_cells));
  for (int n = 0; n <= horizon; ++n) {
    // Column j of the composed kernel is P*^(n) applied to 1_j.
    col_max.setConstant(-std::numeric_limits<double>::infinity());
    col_min.setConstant(std::numeric_limits<double>::infinity());
    col_mean.setZero();
    std::fill(col_count.begin(), col_count.end(), 0);
    for (Eigen::Index i = 0; i < composed.outerSize(); ++i) {
      for (Kernel::InnerIterator it(composed, i); it; ++it) {
        const Eigen::Index j = it.col();
        col_max[j] = std::max(col_max[j], it.value());
        col_min[j] = std::min(col_min[j], it.value());
        col_mean[j] += m[i] * it.value();
        ++col_count[static_cast<std::size_t>(j)];
      }
    }
    double diameter = 0.0;
    for (Eigen::Index j = 0; j < n_cells; ++j) {
      double hi = col_max[j];
      double lo = col_min[j];
      if (col_count[static_cast<std::size_t>(j)] < n_cells) {
        hi = std::max(hi, 0.0);
        lo = std::min(lo, 0.0);
      }
      diameter = std::max({diameter, hi - col_mean[j], col_mean[j] - lo});
    }
    out.diameter.push_back(diameter);
    if (n < horizon) {
      composed = composed * c.at(w).kernel();
      composed.prune(0.0);
      w = c.driving().advance(w, 1);
    }
  }
  out.tail_max = tail_max_of(out.diameter, tail_start(horizon));
  out.trivial = out.tail_max < tol;
  return out;
}

TailPartition tail_partition_trivial(const CocycleFamily& c, const EnvPoint& omega, int horizon) {
  if (horizon < 0) throw PreconditionError("tail_partition_trivial needs horizon >= 0");
  std::vector<std::vector<std::size_t>> targets(c.table().size());
  std::vector<std::size_t> image(c.size());
  for (std::size_t i = 0; i < image.size(); ++i) image[i] = i;
  std::vector<char> hit(c.size());
  TailPartition out;
  EnvPoint w = omega;
  for (int n = 0; n <= horizon; ++n) {
    std::fill(hit.begin(), hit.end(), 0);
    std::size_t atoms = 0;
    for (std::size_t t : image) {
      if (!hit[t]) {
        hit[t] = 1;
        ++atoms;
      }
    }
    out.atoms.push_back(atoms);
    if (n < horizon) {
      const std::size_t v = c.driving().feature(w);
      if (targets[v].empty()) targets[v] = cell_targets(c.table()[v]->kernel());
      for (auto& t : image) t = targets[v][t];
      w = c.driving().advance(w, 1);
    }
  }
  out.trivial = out.atoms.back() == 1;
  return out;
}

double sign_witness_gap(const CocycleFamily& c, const EnvPoint& omega, const Density& f, int n) {
  const Density pushed = push(c, omega, n, f);
  Eigen::VectorXd sgn = pushed.values().unaryExpr([](double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); });
  const Observable witness(c.space(), std::move(sgn));
  return std::abs(pushed.l1_norm() - integrate(f, dual_push(c, omega, n, witness)));
}

ExactnessReport assess_exactness(const CocycleFamily& c, const std::vector<EnvPoint>& omegas,
                                 const std::vector<Density>& f_basis, const ExactnessOptions& opts) {
  for (const auto& f : f_basis) require_same_space(c.space(), f.space(), "assess_exactness");
  if (f_basis.empty()) return assess_exactness(c, omegas, MassBlock(0, static_cast<Eigen::Index>(c.size())), opts);
  return assess_exactness(c, omegas, mass_block(f_basis), opts);
}

ExactnessReport assess_exactness(const CocycleFamily& c, const std::vector<EnvPoint>& omegas,
                                 const MassBlock& f_basis, const ExactnessOptions& opts) {
  if (omegas.empty()) throw PreconditionError("assess_exactness needs at least one omega");
  ExactnessReport report;
  report.horizon = opts.horizon;
  report.tol = opts.tol;
  report.tail_start = tail_start(opts.horizon);
  const bool run_tail = opts.tail_when_available && c.all_cell_maps();
  report.norm_exact = true;
  report.lin_exact = true;
  report.agree = true;
  if (run_tail) report.tail_exact = true;

  const std::vector<int> probe_steps = {1, opts.horizon / 2, opts.horizon};
  for (std::size_t oi = 0; oi < omegas.size(); ++oi) {
    OmegaExactness ox;
    ox.omega_id = oi;
    ox.norms = exactness_norms(c, omegas[oi], f_basis, opts.horizon, opts.tol, opts.workers);
    ox.lin = lin_dual_ball(c, omegas[oi], opts.horizon, opts.tol);
    if (run_tail) ox.tail = tail_partition_trivial(c, omegas[oi], opts.horizon);
    const auto probes = std::min<std::size_t>(opts.witness_probes, static_cast<std::size_t>(f_basis.rows()));
    for (std::size_t b = 0; b < probes; ++b) {
      const Eigen::VectorXd mass = Eigen::RowVectorXd(f_basis.row(static_cast<Eigen::Index>(b))).transpose();
      const Density f = Density::from_mass(c.space(), mass);
      for (int n : probe_steps) ox.witness_gap = std::max(ox.witness_gap, sign_witness_gap(c, omegas[oi], f, n));
    }
    report.norm_exact = report.norm_exact && ox.norms.decayed;
    report.lin_exact = report.lin_exact && ox.lin.trivial;
    if (ox.tail) *report.tail_exact = *report.tail_exact && ox.tail->trivial;
    const bool agree_here = ox.norms.decayed == ox.lin.trivial && (!ox.tail || ox.tail->trivial == ox.lin.trivial);
    report.agree = report.agree && agree_here;
    report.witness_gap = std::max(report.witness_gap, ox.witness_gap);
    report.per_omega.push_back(std::move(ox));
  }
  return report;
}

}  // namespace cocyclelab
