#include "cocyclelab/asymp.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>
#include <tuple>

#include "cocyclelab/errors.hpp"
#include "cocyclelab/mixing.hpp"
#include "cocyclelab/parallel.hpp"

namespace cocyclelab {

namespace {

constexpr double kMassMatch = 1e-9;

Eigen::Index idx(std::size_t i) { return static_cast<Eigen::Index>(i); }

/// Minimal supports of the densities that arrive at one fiber after the
/// burn-in, and the cluster representative of each.
struct Components {
  bool ok = true;
  std::string diagnostics;
  std::vector<std::vector<std::size_t>> supports;
  std::vector<Density> g;
  /// Component of every cell, or -1 for cells no mass reaches.
  std::vector<int> owner;
};

Components cluster_rows(const Kernel& arrived, const SpacePtr& space, double floor_fraction) {
  const std::size_t n_cells = space->size();
  Components out;
  out.owner.assign(n_cells, -1);

  std::vector<std::vector<std::size_t>> row_support(n_cells);
  for (Eigen::Index i = 0; i < arrived.outerSize(); ++i) {
    double top = 0.0;
    for (Kernel::InnerIterator it(arrived, i); it; ++it) top = std::max(top, std::abs(it.value()));
    for (Kernel::InnerIterator it(arrived, i); it; ++it) {
      if (std::abs(it.value()) > floor_fraction * top) row_support[static_cast<std::size_t>(i)].push_back(it.col());
    }
  }
  std::vector<std::vector<std::size_t>> distinct = row_support;
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  std::stable_sort(distinct.begin(), distinct.end(),
                   [](const auto& a, const auto& b) { return a.size() < b.size(); });

  std::vector<std::vector<std::size_t>> minimal;
  for (const auto& s : distinct) {
    const bool fresh = std::all_of(s.begin(), s.end(), [&](std::size_t cell) { return out.owner[cell] < 0; });
    if (fresh) {
      const int id = static_cast<int>(minimal.size());
      for (std::size_t cell : s) out.owner[cell] = id;
      minimal.push_back(s);
      continue;
    }
    // Otherwise s must be a union of whole components found so far.
    std::map<int, std::size_t> counts;
    for (std::size_t cell : s) {
      if (out.owner[cell] < 0) {
        out.ok = false;
        out.diagnostics = "support of size " + std::to_string(s.size()) + " overlaps components partially";
        return out;
      }
      ++counts[out.owner[cell]];
    }
    for (const auto& [id, count] : counts) {
      if (count != minimal[static_cast<std::size_t>(id)].size()) {
        out.ok = false;
        out.diagnostics = "supports neither disjoint nor merged (component " + std::to_string(id + 1) + ")";
        return out;
      }
    }
  }

  // Order components by their smallest cell.
  std::vector<std::size_t> order(minimal.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return minimal[a].front() < minimal[b].front(); });
  std::vector<int> relabel(minimal.size());
  for (std::size_t k = 0; k < order.size(); ++k) relabel[order[k]] = static_cast<int>(k);
  for (auto& o : out.owner) {
    if (o >= 0) o = relabel[static_cast<std::size_t>(o)];
  }
  for (std::size_t k : order) out.supports.push_back(minimal[k]);

  // Representative: normalized average of the rows that land exactly on
  // the component.
  std::vector<Eigen::VectorXd> sums(out.supports.size(), Eigen::VectorXd::Zero(idx(n_cells)));
  std::vector<double> weights(out.supports.size(), 0.0);
  for (std::size_t i = 0; i < n_cells; ++i) {
    const auto& s = row_support[i];
    if (s.empty()) continue;
    const int id = out.owner[s.front()];
    if (s != out.supports[static_cast<std::size_t>(id)]) continue;
    for (Kernel::InnerIterator it(arrived, idx(i)); it; ++it) sums[static_cast<std::size_t>(id)][it.col()] += it.value();
    weights[static_cast<std::size_t>(id)] += 1.0;
  }
  for (std::size_t k = 0; k < sums.size(); ++k) {
    Eigen::VectorXd mass = sums[k] / weights[k];
    for (Eigen::Index j = 0; j < mass.size(); ++j) {
      if (out.owner[static_cast<std::size_t>(j)] != static_cast<int>(k)) mass[j] = 0.0;
    }
    mass /= mass.sum();
    out.g.push_back(Density::from_mass(space, mass));
  }
  return out;
}

/// Components at each fiber, cached by point. A homogeneous cocycle has
/// the same components everywhere.
class ComponentCache {
 public:
  ComponentCache(const CocycleFamily& c, int burn_in, double floor) : c_(c), burn_in_(burn_in), floor_(floor) {}

  const Components& at(const EnvPoint& eta) {
    const auto key = c_.is_homogeneous() ? std::tuple<std::size_t, std::uint64_t, std::int64_t>{0, 0, 0}
                                         : std::tuple{eta.index, eta.path_seed, eta.offset};
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    const EnvPoint origin = c_.driving().advance(eta, -burn_in_);
    const MarkovMatrix arrived = compose(c_, origin, burn_in_);
    return cache_.emplace(key, cluster_rows(arrived.kernel(), c_.space(), floor_)).first->second;
  }

 private:
  const CocycleFamily& c_;
  int burn_in_;
  double floor_;
  std::map<std::tuple<std::size_t, std::uint64_t, std::int64_t>, Components> cache_;
};

double mass_in(const Eigen::VectorXd& mass, const std::vector<std::size_t>& cells) {
  double s = 0.0;
  for (std::size_t cell : cells) s += mass[idx(cell)];
  return s;
}

/// Component at `to` holding (almost) all of `mass`, or -1.
int receiving_component(const Eigen::VectorXd& mass, const Components& to) {
  for (std::size_t k = 0; k < to.supports.size(); ++k) {
    if (mass_in(mass, to.supports[k]) >= 1.0 - kMassMatch) return static_cast<int>(k);
  }
  return -1;
}

}  // namespace

// ------------------------------------------------------------ permutations

std::string cycle_notation(const Permutation& rho) {
  std::vector<char> seen(rho.size(), 0);
  std::ostringstream out;
  for (std::size_t start = 0; start < rho.size(); ++start) {
    if (seen[start]) continue;
    out << '(';
    std::size_t i = start;
    bool first = true;
    while (!seen[i]) {
      seen[i] = 1;
      if (!first) out << ' ';
      out << i + 1;
      first = false;
      i = rho[i];
    }
    out << ')';
  }
  return out.str();
}

Permutation compose_permutations(const Permutation& first, const Permutation& then) {
  if (first.size() != then.size()) throw DimensionError("permutations of different sizes");
  Permutation out(first.size());
  for (std::size_t i = 0; i < first.size(); ++i) out[i] = then[first[i]];
  return out;
}

int permutation_order(const Permutation& rho) {
  Permutation p = rho;
  Permutation id(rho.size());
  std::iota(id.begin(), id.end(), 0);
  int k = 1;
  while (p != id) {
    p = compose_permutations(p, rho);
    ++k;
  }
  return k;
}

const char* to_string(PeriodicityStatus s) {
  switch (s) {
    case PeriodicityStatus::found: return "found";
    case PeriodicityStatus::none_found: return "none found";
    case PeriodicityStatus::indeterminate: return "indeterminate";
  }
  return "unknown";
}

// --------------------------------------------------------------- detection

int default_burn_in(std::size_t cells, int horizon) {
  const int log2n = static_cast<int>(std::ceil(std::log2(static_cast<double>(std::max<std::size_t>(cells, 2)))));
  return std::max(1, std::min(2 * log2n, horizon / 2));
}

PeriodicityResult detect_periodicity(const CocycleFamily& c, const std::vector<EnvPoint>& omegas,
                                     const PeriodicityOptions& opts) {
  if (opts.r_max < 1) throw PreconditionError("r_max must be at least 1");
  if (omegas.empty()) throw PreconditionError("detect_periodicity needs at least one omega");
  const int B = opts.burn_in < 0 ? default_burn_in(c.size(), opts.horizon) : opts.burn_in;
  if (B < 1 || B > opts.horizon) throw PreconditionError("burn-in must lie in [1, horizon]");

  PeriodicityResult result;
  ComponentCache cache(c, B, opts.support_floor);
  PeriodicDecomposition d;
  d.burn_in = B;
  d.horizon = opts.horizon;
  const auto indeterminate = [&](std::string why) {
    result.status = PeriodicityStatus::indeterminate;
    result.decomposition.reset();
    result.diagnostics = std::move(why);
    return result;
  };

  const auto& driving = c.driving();
  for (std::size_t oi = 0; oi < omegas.size(); ++oi) {
    const EnvPoint omega = omegas[oi];
    const Components& here = cache.at(omega);
    if (!here.ok) return indeterminate("omega " + std::to_string(oi) + ": " + here.diagnostics);
    const int r = static_cast<int>(here.supports.size());
    result.components = std::max(result.components, r);
    if (r > opts.r_max) {
      result.status = PeriodicityStatus::none_found;
      result.diagnostics = std::to_string(r) + " components exceed r_max = " + std::to_string(opts.r_max);
      return result;
    }
    if (d.r == 0) d.r = r;
    if (r != d.r) return indeterminate("component count varies with omega");

    FiberDecomposition fiber;
    fiber.omega = omega;
    fiber.omega_id = oi;
    fiber.g = here.g;
    fiber.supports = here.supports;

    // One-step permutations along the orbit and their composition.
    Permutation chain(static_cast<std::size_t>(r));
    std::iota(chain.begin(), chain.end(), 0);
    EnvPoint w = omega;
    for (int k = 0; k < B; ++k) {
      const Components& from = cache.at(w);
      const EnvPoint next = driving.advance(w, 1);
      const Components& to = cache.at(next);
      if (!to.ok) return indeterminate("fiber " + std::to_string(k + 1) + " steps ahead: " + to.diagnostics);
      if (static_cast<int>(to.supports.size()) != r) return indeterminate("component count varies along the orbit");
      Permutation step(static_cast<std::size_t>(r));
      for (std::size_t i = 0; i < step.size(); ++i) {
        const Eigen::VectorXd moved = apply(c.at(w), from.g[i]).mass();
        const int target = receiving_component(moved, to);
        if (target < 0) return indeterminate("component " + std::to_string(i + 1) + " splits after one step");
        step[i] = static_cast<std::size_t>(target);
        if (k == 0) {
          const double defect = (Density::from_mass(c.space(), moved) - to.g[step[i]]).l1_norm();
          d.equivariance_defect = std::max(d.equivariance_defect, defect);
        }
      }
      if (k == 0) fiber.rho = step;
      chain = compose_permutations(chain, step);
      w = next;
    }

    // Direct B-step tracking and lambda from the arrived masses.
    const Components& arrive = cache.at(driving.advance(omega, B));
    fiber.rho_burn_in.assign(static_cast<std::size_t>(r), 0);
    for (std::size_t i = 0; i < fiber.rho_burn_in.size(); ++i) {
      const int target = receiving_component(push(c, omega, B, here.g[i]).mass(), arrive);
      if (target < 0) return indeterminate("component " + std::to_string(i + 1) + " splits within the burn-in");
      fiber.rho_burn_in[i] = static_cast<std::size_t>(target);
    }
    d.chain_consistent = d.chain_consistent && chain == fiber.rho_burn_in;

    const MarkovMatrix forward = compose(c, omega, B);
    const std::size_t n_cells = c.size();
    std::vector<Eigen::VectorXd> lambda(static_cast<std::size_t>(r), Eigen::VectorXd::Zero(idx(n_cells)));
    std::vector<int> inverse_burn_in(static_cast<std::size_t>(r));
    for (std::size_t i = 0; i < fiber.rho_burn_in.size(); ++i) inverse_burn_in[fiber.rho_burn_in[i]] = static_cast<int>(i);
    for (Eigen::Index j = 0; j < forward.kernel().outerSize(); ++j) {
      for (Kernel::InnerIterator it(forward.kernel(), j); it; ++it) {
        const int comp = arrive.owner[static_cast<std::size_t>(it.col())];
        if (comp >= 0) lambda[static_cast<std::size_t>(inverse_burn_in[static_cast<std::size_t>(comp)])][j] += it.value();
      }
    }
    for (std::size_t j = 0; j < n_cells; ++j) {
      double total = 0.0;
      for (const auto& l : lambda) total += l[idx(j)];
      d.lambda_sum_defect = std::max(d.lambda_sum_defect, std::abs(total - 1.0));
    }

    // Residual of the unit point masses f = e_j after the full horizon.
    std::vector<Eigen::Triplet<double>> residual_entries;
    for (std::size_t j = 0; j < n_cells; ++j) {
      residual_entries.emplace_back(idx(j), idx(j), 1.0);
      for (std::size_t i = 0; i < lambda.size(); ++i) {
        const double l = lambda[i][idx(j)];
        if (l == 0.0) continue;
        const Eigen::VectorXd g_mass = here.g[i].mass();
        for (std::size_t cell : here.supports[i]) residual_entries.emplace_back(idx(j), idx(cell), -l * g_mass[idx(cell)]);
      }
    }
    MassBlock block(idx(n_cells), idx(n_cells));
    block.setFromTriplets(residual_entries.begin(), residual_entries.end());
    prune_zeros(block);
    block = push(c, omega, opts.horizon, std::move(block));
    for (double v : row_l1_norms(block)) d.residual = std::max(d.residual, v);

    for (auto& l : lambda) fiber.lambda.emplace_back(c.space(), std::move(l));
    d.fibers.push_back(std::move(fiber));
  }

  for (const auto& f : d.fibers) {
    d.rho_constant = d.rho_constant && f.rho == d.fibers.front().rho;
    d.supports_constant = d.supports_constant && f.supports == d.fibers.front().supports;
  }
  result.best_residual = d.residual;
  if (d.residual >= opts.tol || d.equivariance_defect >= opts.tol) {
    result.status = PeriodicityStatus::none_found;
    std::ostringstream why;
    why << "residual " << d.residual << ", equivariance defect " << d.equivariance_defect << " with r = " << d.r;
    result.diagnostics = why.str();
    return result;
  }
  result.status = PeriodicityStatus::found;
  result.decomposition = std::move(d);
  return result;
}

bool stability_check(const PeriodicDecomposition& d) { return d.r == 1; }

Density invariant_density_from_decomposition(const CocycleFamily& c, const PeriodicDecomposition& d,
                                             std::size_t fiber, double tol) {
  const auto& fd = d.fibers.at(fiber);
  Eigen::VectorXd values = Eigen::VectorXd::Zero(idx(c.size()));
  for (const auto& g : fd.g) values += g.values();
  const Density h(c.space(), values / static_cast<double>(fd.g.size()));

  ComponentCache cache(c, d.burn_in, 1e-12);
  const Components& next = cache.at(c.driving().advance(fd.omega, 1));
  if (!next.ok || next.g.size() != fd.g.size()) {
    throw InvariantError("invariant density", "components at sigma(omega) do not match the decomposition");
  }
  Eigen::VectorXd next_values = Eigen::VectorXd::Zero(idx(c.size()));
  for (const auto& g : next.g) next_values += g.values();
  const Density h_next(c.space(), next_values / static_cast<double>(next.g.size()));
  const double defect = (apply(c.at(fd.omega), h) - h_next).l1_norm();
  if (defect > tol) {
    throw InvariantError("invariant density", "P_omega h_omega differs from h_sigma(omega) by " + std::to_string(defect));
  }
  return h;
}

// -------------------------------------------------------- quasi-constrictive

QcReport quasi_constrictive_probe(const CocycleFamily& c, const std::vector<EnvPoint>& omegas, const QcOptions& opts) {
  if (opts.eps.empty()) throw PreconditionError("quasi_constrictive_probe needs an eps grid");
  if (omegas.empty()) throw PreconditionError("quasi_constrictive_probe needs at least one omega");
  const auto& space = c.space();
  const std::size_t n_cells = space->size();
  const double eps_max = *std::max_element(opts.eps.begin(), opts.eps.end());

  std::vector<std::vector<std::size_t>> sets = opts.sets;
  if (sets.empty()) {
    for (std::size_t len = 1; len <= n_cells; len *= 2) {
      const std::size_t stride = std::max<std::size_t>(1, len / 2);
      bool any = false;
      for (std::size_t start = 0; start < n_cells; start += stride) {
        std::vector<std::size_t> cells;
        for (std::size_t k = 0; k < len; ++k) cells.push_back((start + k) % n_cells);
        if (space->measure(cells) < eps_max) {
          sets.push_back(std::move(cells));
          any = true;
        }
      }
      if (!any) break;
    }
  }
  std::vector<double> measures;
  std::vector<Eigen::Triplet<double>> triplets;
  for (std::size_t s = 0; s < sets.size(); ++s) {
    for (std::size_t cell : sets[s]) {
      if (cell >= n_cells) throw DimensionError("quasi_constrictive_probe: set cell out of range");
      triplets.emplace_back(idx(cell), idx(s), 1.0);
    }
    measures.push_back(space->measure(sets[s]));
  }
  Eigen::SparseMatrix<double> membership(idx(n_cells), idx(sets.size()));
  membership.setFromTriplets(triplets.begin(), triplets.end());

  std::vector<Density> basis = opts.f_basis;
  if (basis.empty()) {
    for (std::size_t j = 0; j < n_cells; ++j) basis.push_back(Density::point_mass(space, j));
  }
  const MassBlock start = mass_block(basis);
  const int tail = tail_start(opts.horizon);

  std::vector<std::vector<double>> worst(omegas.size(), std::vector<double>(sets.size(), 0.0));
  parallel_for(omegas.size(), opts.workers, [&](std::size_t oi) {
    MassBlock block = push(c, omegas[oi], tail, start);
    EnvPoint w = c.driving().advance(omegas[oi], tail);
    for (int n = tail; n <= opts.horizon; ++n) {
      const Eigen::SparseMatrix<double, Eigen::RowMajor> in_sets = block * membership;
      for (Eigen::Index r = 0; r < in_sets.outerSize(); ++r) {
        for (decltype(in_sets)::InnerIterator it(in_sets, r); it; ++it) {
          auto& slot = worst[oi][static_cast<std::size_t>(it.col())];
          slot = std::max(slot, it.value());
        }
      }
      if (n < opts.horizon) {
        block = block * c.at(w).kernel();
        prune_zeros(block);
        w = c.driving().advance(w, 1);
      }
    }
  });
  std::vector<double> sup(sets.size(), 0.0);
  for (const auto& per : worst) {
    for (std::size_t s = 0; s < sets.size(); ++s) sup[s] = std::max(sup[s], per[s]);
  }

  QcReport report;
  report.omega_count = omegas.size();
  report.set_count = sets.size();
  bool any_resolved = false;
  bool all_pass = true;
  for (double eps : opts.eps) {
    QcRow row;
    row.eps = eps;
    row.delta = eps;
    row.min_measure = std::numeric_limits<double>::infinity();
    std::size_t witness = sets.size();
    for (std::size_t s = 0; s < sets.size(); ++s) {
      if (!(measures[s] < eps)) continue;
      ++row.family_size;
      row.min_measure = std::min(row.min_measure, measures[s]);
      if (sup[s] >= eps && measures[s] < row.delta) {
        row.delta = measures[s];
        witness = s;
      }
    }
    if (row.family_size == 0) row.min_measure = 0.0;
    row.resolved = row.family_size > 0 && row.min_measure <= eps / 10.0 * (1.0 + 1e-12);
    if (witness < sets.size()) {
      row.witness = sets[witness];
      row.witness_value = sup[witness];
    }
    row.passed = row.resolved && row.delta > row.min_measure;
    if (row.resolved) {
      any_resolved = true;
      all_pass = all_pass && row.passed;
    }
    report.rows.push_back(std::move(row));
  }
  report.quasi_constrictive = any_resolved && all_pass;
  return report;
}

// ---------------------------------------------------------- restricted power

RestrictedCocycle restrict_power(const CocycleFamily& c, int k, const std::vector<std::size_t>& support) {
  if (k < 1) throw PreconditionError("restrict_power needs k >= 1");
  if (support.empty()) throw PreconditionError("restrict_power needs a nonempty support");
  std::vector<std::size_t> cells = support;
  std::sort(cells.begin(), cells.end());
  cells.erase(std::unique(cells.begin(), cells.end()), cells.end());
  std::vector<long> local(c.size(), -1);
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (cells[i] >= c.size()) throw DimensionError("restrict_power: support cell out of range");
    local[cells[i]] = static_cast<long>(i);
  }

  SpacePtr sub;
  if (c.space()->is_uniform()) {
    sub = FiniteMeasureSpace::uniform(cells.size());
  } else {
    const double total = c.space()->measure(cells);
    std::vector<double> w;
    for (std::size_t cell : cells) w.push_back(c.space()->weight(cell) / total);
    sub = FiniteMeasureSpace::weighted(std::move(w));
  }

  const auto restrict = [&](const MarkovMatrix& p) {
    std::vector<Eigen::Triplet<double>> triplets;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      const std::size_t row_start = triplets.size();
      double inside = 0.0;
      double outside = 0.0;
      for (Kernel::InnerIterator it(p.kernel(), idx(cells[i])); it; ++it) {
        const long j = local[static_cast<std::size_t>(it.col())];
        if (j < 0) {
          outside += std::abs(it.value());
        } else {
          inside += it.value();
          triplets.emplace_back(idx(i), static_cast<Eigen::Index>(j), it.value());
        }
      }
      if (outside > 1e-9) {
        throw PreconditionError("restrict_power: support is not invariant (cell " + std::to_string(cells[i]) +
                                " leaks " + std::to_string(outside) + ")");
      }
      for (std::size_t t = row_start; t < triplets.size(); ++t) {
        triplets[t] = Eigen::Triplet<double>(triplets[t].row(), triplets[t].col(), triplets[t].value() / inside);
      }
    }
    Kernel kernel(idx(cells.size()), idx(cells.size()));
    kernel.setFromTriplets(triplets.begin(), triplets.end());
    return std::make_shared<const MarkovMatrix>(sub, std::move(kernel), p.representation());
  };

  const auto& d = c.driving();
  const auto power = std::make_shared<const DrivingSystem>(d.power(k));
  std::vector<MatrixPtr> table;
  if (c.is_homogeneous()) {
    MarkovMatrix pk = MarkovMatrix::identity(c.space());
    for (int s = 0; s < k; ++s) pk = pk.then(*c.table().front());
    table.assign(power->feature_count(), restrict(pk));
  } else if (d.is_finite()) {
    for (const auto& w : power->all_points()) table.push_back(restrict(compose(c, w, k)));
  } else {
    const std::size_t features = power->feature_count();
    if (features > 4096) throw UnsupportedError("restrict_power: too many feature words for sigma^k");
    const std::size_t base = d.feature_count();
    for (std::size_t word = 0; word < features; ++word) {
      MarkovMatrix pk = MarkovMatrix::identity(c.space());
      std::size_t rest = word;
      for (int s = 0; s < k; ++s) {
        pk = pk.then(*c.table()[rest % base]);
        rest /= base;
      }
      table.push_back(restrict(pk));
    }
  }
  RestrictedCocycle out;
  out.cocycle = std::make_shared<const CocycleFamily>(power, sub, std::move(table));
  out.cells = std::move(cells);
  out.k = k;
  return out;
}

}  // namespace cocyclelab
