#include "cocyclelab/skewprod.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "cocyclelab/errors.hpp"
#include "cocyclelab/mixing.hpp"
#include "cocyclelab/parallel.hpp"

namespace cocyclelab {

namespace {

Eigen::Index idx(std::size_t i) { return static_cast<Eigen::Index>(i); }

/// State factors s[n](a, b) = int P^(n)_omega(1_{B_b} h_omega) 1_{A_a} dm
/// through the operator and through the dual cocycle.
struct StateFactors {
  std::vector<Eigen::MatrixXd> op;
  std::vector<Eigen::MatrixXd> koopman;
};

Eigen::SparseMatrix<double> indicator_columns(const ProductSet& s, std::size_t cells) {
  std::vector<Eigen::Triplet<double>> t;
  for (std::size_t k = 0; k < s.rectangles().size(); ++k) {
    for (std::size_t cell : s.rectangles()[k].cells) {
      if (cell >= cells) throw DimensionError("product set cell out of range");
      t.emplace_back(idx(cell), idx(k), 1.0);
    }
  }
  Eigen::SparseMatrix<double> m(idx(cells), idx(s.rectangles().size()));
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

StateFactors state_factors(const CocycleFamily& c, const EnvPoint& omega, const Density& h, const ProductSet& a,
                           const ProductSet& b, int horizon) {
  const std::size_t n_cells = c.size();
  const Eigen::SparseMatrix<double> a_cols = indicator_columns(a, n_cells);
  const Eigen::VectorXd h_mass = h.mass();

  // Rows: masses of 1_{B_b} h_omega.
  std::vector<Eigen::Triplet<double>> t;
  for (std::size_t k = 0; k < b.rectangles().size(); ++k) {
    for (std::size_t cell : b.rectangles()[k].cells) {
      if (cell >= n_cells) throw DimensionError("product set cell out of range");
      if (h_mass[idx(cell)] != 0.0) t.emplace_back(idx(k), idx(cell), h_mass[idx(cell)]);
    }
  }
  MassBlock block(idx(b.rectangles().size()), idx(n_cells));
  block.setFromTriplets(t.begin(), t.end());
  const Eigen::MatrixXd b_rows = Eigen::MatrixXd(block);

  StateFactors out;
  Kernel composed = MarkovMatrix::identity(c.space()).kernel();
  EnvPoint w = omega;
  for (int n = 0; n <= horizon; ++n) {
    out.op.push_back(Eigen::MatrixXd(a_cols.transpose() * block.transpose()));
    // Column a of composed * 1_{A_a} is P*^(n)_omega 1_{A_a}.
    const Eigen::MatrixXd pulled = Eigen::MatrixXd(composed * a_cols);
    out.koopman.push_back((b_rows * pulled).transpose());
    if (n < horizon) {
      const Kernel& k = c.at(w).kernel();
      block = block * k;
      prune_zeros(block);
      composed = composed * k;
      composed.prune(0.0);
      w = c.driving().advance(w, 1);
    }
  }
  return out;
}

double mu(const Density& h, const std::vector<std::size_t>& cells) {
  double s = 0.0;
  for (std::size_t cell : cells) s += h.value(cell) * h.space()->weight(cell);
  return s;
}

/// P(C1 and sigma^-n C2) by summing over every assignment of the
/// constrained coordinates; empty when the enumeration is too large.
std::optional<double> enumerate_joint(const DrivingSystem& d, const Cylinder& c1, const Cylinder& c2, std::int64_t n) {
  std::set<std::int64_t> coords;
  for (std::size_t i = 0; i < c1.width(); ++i) coords.insert(c1.first + static_cast<std::int64_t>(i));
  const std::int64_t shift = n * d.step();
  for (std::size_t i = 0; i < c2.width(); ++i) coords.insert(c2.first + static_cast<std::int64_t>(i) + shift);
  const std::vector<std::int64_t> list(coords.begin(), coords.end());
  const std::size_t alphabet = d.alphabet_size();
  double count = 1.0;
  for (std::size_t i = 0; i < list.size(); ++i) count *= static_cast<double>(alphabet);
  if (count > 1 << 20) return std::nullopt;

  std::vector<int> assign(list.size(), 0);
  double total = 0.0;
  while (true) {
    std::map<std::int64_t, int> value;
    double prob = 1.0;
    for (std::size_t i = 0; i < list.size(); ++i) {
      value[list[i]] = assign[i];
      prob *= d.probabilities()[static_cast<std::size_t>(assign[i])];
    }
    bool ok = true;
    for (std::size_t i = 0; i < c1.width() && ok; ++i) ok = value[c1.first + static_cast<std::int64_t>(i)] == c1.symbols[i];
    for (std::size_t i = 0; i < c2.width() && ok; ++i) {
      ok = value[c2.first + static_cast<std::int64_t>(i) + shift] == c2.symbols[i];
    }
    if (ok) total += prob;
    std::size_t pos = 0;
    while (pos < assign.size() && ++assign[pos] == static_cast<int>(alphabet)) assign[pos++] = 0;
    if (pos == assign.size()) break;
  }
  return total;
}

void check_sets(const CocycleFamily& c, const ProductSet& s, const SkewOptions& opts) {
  if (s.env_width() > opts.max_env_width) {
    throw PreconditionError("product set cylinder wider than " + std::to_string(opts.max_env_width));
  }
  for (const auto& r : s.rectangles()) r.env.probability(c.driving());
}

}  // namespace

// ------------------------------------------------------------------ EnvSet

EnvSet EnvSet::points(std::vector<std::size_t> indices) {
  EnvSet s(Kind::points);
  std::sort(indices.begin(), indices.end());
  indices.erase(std::unique(indices.begin(), indices.end()), indices.end());
  s.points_ = std::move(indices);
  return s;
}

EnvSet EnvSet::cylinder(Cylinder c) {
  EnvSet s(Kind::cylinder);
  s.cylinder_ = std::move(c);
  return s;
}

bool EnvSet::contains(const DrivingSystem& d, const EnvPoint& omega) const {
  switch (kind_) {
    case Kind::all: return true;
    case Kind::points:
      if (!d.is_finite()) throw PreconditionError("point sets need a finite driving system");
      return std::binary_search(points_.begin(), points_.end(), omega.index);
    case Kind::cylinder:
      if (d.is_finite()) throw PreconditionError("cylinder sets need the Bernoulli shift");
      return d.in_cylinder(omega, cylinder_);
  }
  return false;
}

double EnvSet::probability(const DrivingSystem& d) const {
  switch (kind_) {
    case Kind::all: return 1.0;
    case Kind::points: {
      if (!d.is_finite()) throw PreconditionError("point sets need a finite driving system");
      double p = 0.0;
      for (std::size_t i : points_) {
        if (i >= d.point_count()) throw DimensionError("environment point out of range");
        p += d.probabilities()[i];
      }
      return p;
    }
    case Kind::cylinder:
      if (d.is_finite()) throw PreconditionError("cylinder sets need the Bernoulli shift");
      return d.cylinder_probability(cylinder_);
  }
  return 0.0;
}

Cylinder EnvSet::as_cylinder() const {
  if (kind_ == Kind::points) throw PreconditionError("point sets have no cylinder form");
  return kind_ == Kind::all ? Cylinder{} : cylinder_;
}

// -------------------------------------------------------------- ProductSet

ProductSet ProductSet::rectangle(EnvSet env, std::vector<std::size_t> cells) {
  ProductSet s;
  s.add(std::move(env), std::move(cells));
  return s;
}

ProductSet ProductSet::everything(const SpacePtr& space) {
  std::vector<std::size_t> cells(space->size());
  for (std::size_t i = 0; i < cells.size(); ++i) cells[i] = i;
  return rectangle(EnvSet::all(), std::move(cells));
}

ProductSet& ProductSet::add(EnvSet env, std::vector<std::size_t> cells) {
  std::sort(cells.begin(), cells.end());
  cells.erase(std::unique(cells.begin(), cells.end()), cells.end());
  for (const auto& r : rects_) {
    std::vector<std::size_t> common;
    std::set_intersection(r.cells.begin(), r.cells.end(), cells.begin(), cells.end(), std::back_inserter(common));
    if (common.empty()) continue;
    const bool env_overlap = [&] {
      if (r.env.kind() == EnvSet::Kind::all || env.kind() == EnvSet::Kind::all) return true;
      if (r.env.kind() == EnvSet::Kind::points && env.kind() == EnvSet::Kind::points) {
        std::vector<std::size_t> both;
        std::set_intersection(r.env.point_indices().begin(), r.env.point_indices().end(), env.point_indices().begin(),
                              env.point_indices().end(), std::back_inserter(both));
        return !both.empty();
      }
      return false;
    }();
    if (env_overlap) throw PreconditionError("product set rectangles overlap");
  }
  rects_.push_back(Rectangle{std::move(env), std::move(cells)});
  return *this;
}

std::size_t ProductSet::env_width() const {
  std::size_t w = 0;
  for (const auto& r : rects_) {
    if (r.env.kind() == EnvSet::Kind::cylinder) w = std::max(w, r.env.cylinder_set().width());
  }
  return w;
}

// ---------------------------------------------------------------- measures

NuEstimate nu_measure(const CocycleFamily& c, const InvariantDensityMap& h, const ProductSet& a,
                      const SkewOptions& opts) {
  check_sets(c, a, opts);
  const auto& d = c.driving();
  NuEstimate out;
  if (d.is_finite()) {
    for (const auto& w : d.all_points()) {
      const Density hw = h.at(w);
      for (const auto& r : a.rectangles()) {
        if (r.env.contains(d, w)) out.value += d.probabilities()[w.index] * mu(hw, r.cells);
      }
    }
    return out;
  }
  if (c.is_homogeneous()) {
    const Density h0 = h.at(EnvPoint{});
    for (const auto& r : a.rectangles()) out.value += r.env.probability(d) * mu(h0, r.cells);
    return out;
  }
  const auto samples = d.sample(opts.mc_samples, mix_seed(opts.seed, 0x6e75));
  std::vector<double> values(samples.size(), 0.0);
  parallel_for(samples.size(), opts.workers, [&](std::size_t m) {
    const Density hw = h.at(samples[m]);
    for (const auto& r : a.rectangles()) {
      if (r.env.contains(d, samples[m])) values[m] += mu(hw, r.cells);
    }
  });
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  var /= static_cast<double>(std::max<std::size_t>(1, values.size() - 1));
  out.value = mean;
  out.std_error = std::sqrt(var / static_cast<double>(values.size()));
  out.exact = false;
  return out;
}

SkewCurve skew_mixing_curve(const CocycleFamily& c, const InvariantDensityMap& h, const ProductSet& a,
                            const ProductSet& b, const SkewOptions& opts) {
  const auto& d = c.driving();
  if (!d.is_invertible()) throw UnsupportedError("skew product needs an invertible driving system");
  if (opts.horizon < 0) throw PreconditionError("skew horizon must be >= 0");
  check_sets(c, a, opts);
  check_sets(c, b, opts);

  const std::size_t steps = static_cast<std::size_t>(opts.horizon) + 1;
  const auto& ra = a.rectangles();
  const auto& rb = b.rectangles();
  SkewCurve out;
  out.joint.assign(steps, 0.0);
  out.joint_koopman.assign(steps, 0.0);
  out.driving_mixing = d.is_mixing();
  if (!out.driving_mixing) out.flag = "driving not mixing; skew mixing not implied";

  const NuEstimate nu_a = nu_measure(c, h, a, opts);
  const NuEstimate nu_b = nu_measure(c, h, b, opts);
  out.product.assign(steps, nu_a.value * nu_b.value);

  if (d.is_finite()) {
    out.method = "exact sum over environment points";
    if (c.is_homogeneous()) out.joint_product_formula.assign(steps, 0.0);
    const auto points = d.all_points();
    for (const auto& w : points) {
      const double pw = d.probabilities()[w.index];
      const StateFactors s = state_factors(c, w, h.at(w), a, b, opts.horizon);
      for (std::size_t n = 0; n < steps; ++n) {
        const EnvPoint ahead = d.advance(w, static_cast<std::int64_t>(n));
        for (std::size_t ia = 0; ia < ra.size(); ++ia) {
          if (!ra[ia].env.contains(d, ahead)) continue;
          for (std::size_t ib = 0; ib < rb.size(); ++ib) {
            if (!rb[ib].env.contains(d, w)) continue;
            out.joint[n] += pw * s.op[n](idx(ia), idx(ib));
            out.joint_koopman[n] += pw * s.koopman[n](idx(ia), idx(ib));
          }
        }
      }
    }
    if (c.is_homogeneous()) {
      // Environment factor P(E_B and sigma^-n E_A) times one state factor.
      const StateFactors s = state_factors(c, points.front(), h.at(points.front()), a, b, opts.horizon);
      for (std::size_t n = 0; n < steps; ++n) {
        for (std::size_t ia = 0; ia < ra.size(); ++ia) {
          for (std::size_t ib = 0; ib < rb.size(); ++ib) {
            double env = 0.0;
            for (const auto& w : points) {
              if (rb[ib].env.contains(d, w) && ra[ia].env.contains(d, d.advance(w, static_cast<std::int64_t>(n)))) {
                env += d.probabilities()[w.index];
              }
            }
            out.joint_product_formula[n] += env * s.op[n](idx(ia), idx(ib));
          }
        }
      }
    }
  } else if (c.is_homogeneous()) {
    out.method = "exact cylinder enumeration";
    out.joint_product_formula.assign(steps, 0.0);
    out.env_factorization_gap.assign(steps, 0.0);
    const EnvPoint w{};
    const StateFactors s = state_factors(c, w, h.at(w), a, b, opts.horizon);
    for (std::size_t n = 0; n < steps; ++n) {
      const auto shift = static_cast<std::int64_t>(n);
      for (std::size_t ia = 0; ia < ra.size(); ++ia) {
        for (std::size_t ib = 0; ib < rb.size(); ++ib) {
          const Cylinder cb = rb[ib].env.as_cylinder();
          const Cylinder ca = ra[ia].env.as_cylinder();
          const double merged = d.cylinder_joint_probability(cb, ca, shift);
          const double env = enumerate_joint(d, cb, ca, shift).value_or(merged);
          out.joint[n] += env * s.op[n](idx(ia), idx(ib));
          out.joint_koopman[n] += env * s.koopman[n](idx(ia), idx(ib));
          out.joint_product_formula[n] += merged * s.op[n](idx(ia), idx(ib));
          out.env_factorization_gap[n] = std::max(
              out.env_factorization_gap[n], std::abs(merged - d.cylinder_probability(cb) * d.cylinder_probability(ca)));
        }
      }
    }
  } else {
    out.method = "Monte-Carlo over environment samples";
    out.exact = false;
    const auto samples = d.sample(opts.mc_samples, mix_seed(opts.seed, 0x736b));
    std::vector<std::vector<double>> per(samples.size(), std::vector<double>(steps, 0.0));
    std::vector<std::vector<double>> per_k(samples.size(), std::vector<double>(steps, 0.0));
    parallel_for(samples.size(), opts.workers, [&](std::size_t m) {
      const EnvPoint w = samples[m];
      const StateFactors s = state_factors(c, w, h.at(w), a, b, opts.horizon);
      for (std::size_t n = 0; n < steps; ++n) {
        const EnvPoint ahead = d.advance(w, static_cast<std::int64_t>(n));
        for (std::size_t ia = 0; ia < ra.size(); ++ia) {
          if (!ra[ia].env.contains(d, ahead)) continue;
          for (std::size_t ib = 0; ib < rb.size(); ++ib) {
            if (!rb[ib].env.contains(d, w)) continue;
            per[m][n] += s.op[n](idx(ia), idx(ib));
            per_k[m][n] += s.koopman[n](idx(ia), idx(ib));
          }
        }
      }
    });
    const double count = static_cast<double>(samples.size());
    for (std::size_t n = 0; n < steps; ++n) {
      double mean = 0.0;
      double mean_k = 0.0;
      for (std::size_t m = 0; m < samples.size(); ++m) {
        mean += per[m][n];
        mean_k += per_k[m][n];
      }
      mean /= count;
      mean_k /= count;
      double var = 0.0;
      for (std::size_t m = 0; m < samples.size(); ++m) var += (per[m][n] - mean) * (per[m][n] - mean);
      var /= std::max(1.0, count - 1.0);
      out.joint[n] = mean;
      out.joint_koopman[n] = mean_k;
      out.std_error = std::max(out.std_error, std::sqrt(var / count));
    }
  }
  if (!nu_a.exact || !nu_b.exact) out.exact = false;

  out.discrepancy.resize(steps);
  for (std::size_t n = 0; n < steps; ++n) {
    out.discrepancy[n] = out.joint[n] - out.product[n];
    out.route_gap = std::max(out.route_gap, std::abs(out.joint[n] - out.joint_koopman[n]));
    if (!out.joint_product_formula.empty()) {
      out.formula_gap = std::max(out.formula_gap, std::abs(out.joint[n] - out.joint_product_formula[n]));
    }
  }
  const int tail = tail_start(opts.horizon);
  for (std::size_t n = static_cast<std::size_t>(tail); n < steps; ++n) {
    out.tail_max = std::max(out.tail_max, std::abs(out.discrepancy[n]));
  }
  out.decayed = out.tail_max < opts.tol;
  return out;
}

double theta_invariance_defect(const CocycleFamily& c, const InvariantDensityMap& h, const ProductSet& a,
                               const SkewOptions& opts) {
  SkewOptions one = opts;
  one.horizon = 1;
  const SkewCurve curve = skew_mixing_curve(c, h, a, ProductSet::everything(c.space()), one);
  return std::abs(curve.joint[1] - nu_measure(c, h, a, opts).value);
}

}  // namespace cocyclelab
