#include "cocyclelab/transfer.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <random>

#include "cocyclelab/driving.hpp"
#include "cocyclelab/errors.hpp"
#include "cocyclelab/parallel.hpp"

namespace cocyclelab {

namespace {

using Triplet = Eigen::Triplet<double>;

Eigen::Index idx(std::size_t i) { return static_cast<Eigen::Index>(i); }

void check_unit_interval(double v, const MapSpec& spec) {
  if (!(v >= 0.0 && v < 1.0)) {
    throw DomainError(spec.name() + " maps a point to " + std::to_string(v) + ", outside [0,1)");
  }
}

/// Left endpoints of the cells of a 1-D space (cumulative weights) plus 1.
std::vector<double> cell_edges(const FiniteMeasureSpace& space) {
  std::vector<double> edges(space.size() + 1, 0.0);
  for (std::size_t i = 0; i < space.size(); ++i) edges[i + 1] = edges[i] + space.weight(i);
  edges.back() = 1.0;
  return edges;
}

std::size_t locate(const std::vector<double>& edges, double x) {
  const auto it = std::upper_bound(edges.begin(), edges.end(), x);
  const auto cell = static_cast<std::size_t>(std::distance(edges.begin(), it)) - 1;
  return std::min(cell, edges.size() - 2);
}

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

void require_uniform(const SpacePtr& space, const MapSpec& spec) {
  if (!space->is_uniform()) {
    throw ResolutionError("exact " + spec.name() + " kernel needs a uniform partition");
  }
}

MarkovMatrix from_triplets(const SpacePtr& space, std::vector<Triplet>& triplets, Representation rep) {
  const auto n = idx(space->size());
  Kernel k(n, n);
  k.setFromTriplets(triplets.begin(), triplets.end());
  return MarkovMatrix(space, std::move(k), rep);
}

}  // namespace

const char* to_string(MapKind kind) {
  switch (kind) {
    case MapKind::identity: return "identity";
    case MapKind::constant: return "constant";
    case MapKind::doubling: return "doubling";
    case MapKind::tent: return "tent";
    case MapKind::piecewise_linear: return "piecewise_linear";
    case MapKind::baker_cyclic: return "baker_cyclic";
    case MapKind::baker_planar: return "baker_planar";
    case MapKind::custom: return "custom";
  }
  return "unknown";
}

std::size_t cell_of(double x, std::size_t cells) {
  const auto c = static_cast<std::size_t>(x * static_cast<double>(cells));
  return std::min(c, cells - 1);
}

std::size_t cyclic_shift_cell(std::size_t cell, int bits) {
  const std::size_t top = (cell >> (bits - 1)) & 1U;
  const std::size_t mask = (std::size_t{1} << bits) - 1;
  return ((cell << 1) & mask) | top;
}

// ---------------------------------------------------------------- MapSpec

MapSpec MapSpec::piecewise_linear(std::vector<double> breakpoints, std::vector<double> slopes,
                                  std::vector<double> offsets) {
  if (breakpoints.size() < 2 || breakpoints.front() != 0.0 || breakpoints.back() != 1.0) {
    throw InvariantError("pieces cover", "breakpoints must start at 0 and end at 1");
  }
  for (std::size_t i = 1; i < breakpoints.size(); ++i) {
    if (!(breakpoints[i] > breakpoints[i - 1])) {
      throw InvariantError("pieces disjoint", "breakpoints must be strictly increasing");
    }
  }
  const std::size_t pieces = breakpoints.size() - 1;
  if (slopes.size() != pieces) throw InvariantError("pieces cover", "need one slope per piece");
  if (!offsets.empty() && offsets.size() != pieces) {
    throw InvariantError("pieces cover", "need one offset per piece");
  }
  if (offsets.empty()) {
    for (double s : slopes) offsets.push_back(s >= 0.0 ? 0.0 : 1.0);
  }
  MapSpec spec(MapKind::piecewise_linear);
  spec.breakpoints_ = std::move(breakpoints);
  spec.slopes_ = std::move(slopes);
  spec.offsets_ = std::move(offsets);
  return spec;
}

MapSpec MapSpec::baker_cyclic(int bits) {
  if (bits < 2 || bits % 2 != 0) throw InvariantError("bit count", "baker_cyclic needs an even bit count >= 2");
  if (bits > 40) throw InvariantError("bit count", "baker_cyclic bit count too large");
  MapSpec spec(MapKind::baker_cyclic);
  spec.bits_ = bits;
  return spec;
}

MapSpec MapSpec::custom(std::function<double(double)> map, std::string name) {
  MapSpec spec(MapKind::custom);
  spec.custom_ = std::move(map);
  spec.custom_name_ = std::move(name);
  return spec;
}

MapSpec MapSpec::custom2(std::function<Point2(Point2)> map, std::string name) {
  MapSpec spec(MapKind::custom, 2);
  spec.custom2_ = std::move(map);
  spec.custom_name_ = std::move(name);
  return spec;
}

std::string MapSpec::name() const {
  if (kind_ == MapKind::custom) return custom_name_;
  if (kind_ == MapKind::baker_cyclic) return "baker_cyclic(" + std::to_string(bits_) + ")";
  return to_string(kind_);
}

double MapSpec::operator()(double x) const {
  if (dimension_ != 1) throw PreconditionError(name() + " is a planar map");
  double y = 0.0;
  switch (kind_) {
    case MapKind::identity: y = x; break;
    case MapKind::constant: y = 0.0; break;
    case MapKind::doubling: y = 2.0 * x - std::floor(2.0 * x); break;
    case MapKind::tent: y = 1.0 - std::abs(1.0 - 2.0 * x); break;
    case MapKind::piecewise_linear: {
      const auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), x);
      auto piece = static_cast<std::size_t>(std::distance(breakpoints_.begin(), it));
      piece = std::clamp<std::size_t>(piece, 1, slopes_.size()) - 1;
      y = offsets_[piece] + slopes_[piece] * (x - breakpoints_[piece]);
      break;
    }
    case MapKind::baker_cyclic: {
      const std::size_t cells = std::size_t{1} << bits_;
      const std::size_t c = cell_of(x, cells);
      const double frac = x * static_cast<double>(cells) - static_cast<double>(c);
      y = (static_cast<double>(cyclic_shift_cell(c, bits_)) + frac) / static_cast<double>(cells);
      break;
    }
    case MapKind::custom: y = custom_(x); break;
    case MapKind::baker_planar: break;
  }
  check_unit_interval(y, *this);
  return y;
}

Point2 MapSpec::operator()(Point2 p) const {
  if (dimension_ != 2) throw PreconditionError(name() + " is a map of the interval");
  Point2 out{};
  if (kind_ == MapKind::baker_planar) {
    const double b = std::floor(2.0 * p[0]);
    out = {2.0 * p[0] - b, (p[1] + b) / 2.0};
  } else {
    out = custom2_(p);
  }
  check_unit_interval(out[0], *this);
  check_unit_interval(out[1], *this);
  return out;
}

// --------------------------------------------------------------- builders

MarkovMatrix pf_exact(const MapSpec& spec, const SpacePtr& space) {
  const std::size_t n = space->size();
  std::vector<Triplet> triplets;
  switch (spec.kind()) {
    case MapKind::identity:
      return MarkovMatrix::identity(space);
    case MapKind::constant:
      for (std::size_t i = 0; i < n; ++i) triplets.emplace_back(idx(i), 0, 1.0);
      break;
    case MapKind::doubling:
      require_uniform(space, spec);
      if (!is_power_of_two(n) || n < 2 || space->ny() != 1) {
        throw ResolutionError("exact doubling kernel needs 2^p cells on the interval, got " + std::to_string(n));
      }
      // Cell i = [i/N, (i+1)/N) maps onto cells 2i and 2i+1 (mod N), half each.
      for (std::size_t i = 0; i < n; ++i) {
        triplets.emplace_back(idx(i), idx((2 * i) % n), 0.5);
        triplets.emplace_back(idx(i), idx((2 * i + 1) % n), 0.5);
      }
      break;
    case MapKind::baker_cyclic: {
      require_uniform(space, spec);
      const std::size_t cells = std::size_t{1} << spec.bits();
      if (n != cells) {
        throw ResolutionError("baker_cyclic(" + std::to_string(spec.bits()) + ") needs " + std::to_string(cells) +
                              " cells, got " + std::to_string(n));
      }
      for (std::size_t i = 0; i < n; ++i) triplets.emplace_back(idx(i), idx(cyclic_shift_cell(i, spec.bits())), 1.0);
      break;
    }
    default:
      throw ResolutionError("no exact kernel for " + spec.name() + "; use the Ulam builder");
  }
  return from_triplets(space, triplets, Representation::exact);
}

MarkovMatrix pf_ulam(const MapSpec& spec, const SpacePtr& space, std::size_t samples_per_cell, std::uint64_t seed,
                     unsigned workers) {
  if (samples_per_cell == 0) throw PreconditionError("samples_per_cell must be at least 1");
  const std::size_t n = space->size();
  const bool planar = spec.dimension() == 2;
  if (planar && !space->is_uniform()) throw ResolutionError("planar Ulam builder needs a uniform grid");
  if (!planar && space->ny() != 1) throw ResolutionError("interval map on a planar grid");
  const auto edges = planar ? std::vector<double>{} : cell_edges(*space);
  const std::size_t nx = space->nx();
  const std::size_t ny = space->ny();

  std::vector<std::map<std::size_t, std::size_t>> counts(n);
  parallel_for(n, workers, [&](std::size_t i) {
    std::mt19937_64 rng(mix_seed(seed, i));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto draw = [&] {
      double u = unit(rng);
      while (u <= 0.0) u = unit(rng);
      return u;
    };
    auto& row = counts[i];
    for (std::size_t s = 0; s < samples_per_cell; ++s) {
      if (planar) {
        const std::size_t ix = i % nx;
        const std::size_t iy = i / nx;
        const Point2 p{(static_cast<double>(ix) + draw()) / static_cast<double>(nx),
                       (static_cast<double>(iy) + draw()) / static_cast<double>(ny)};
        const Point2 q = spec(p);
        ++row[cell_of(q[1], ny) * nx + cell_of(q[0], nx)];
      } else {
        const double x = std::min(edges[i] + draw() * (edges[i + 1] - edges[i]), std::nextafter(edges[i + 1], 0.0));
        ++row[locate(edges, spec(x))];
      }
    }
  });

  std::vector<Triplet> triplets;
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& [j, c] : counts[i]) {
      triplets.emplace_back(idx(i), idx(j), static_cast<double>(c) / static_cast<double>(samples_per_cell));
    }
  }
  const auto nn = idx(n);
  Kernel k(nn, nn);
  k.setFromTriplets(triplets.begin(), triplets.end());
  // Renormalize so conservation holds to rounding; identical counts yield
  // exactly representable entries for power-of-two sample sizes.
  for (Eigen::Index r = 0; r < k.outerSize(); ++r) {
    double sum = 0.0;
    for (Kernel::InnerIterator it(k, r); it; ++it) sum += it.value();
    for (Kernel::InnerIterator it(k, r); it; ++it) it.valueRef() /= sum;
  }
  const bool exact = std::all_of(counts.begin(), counts.end(), [&](const auto& row) {
    return row.size() == 1 && row.begin()->second == samples_per_cell;
  });
  return MarkovMatrix(space, std::move(k), exact ? Representation::exact : Representation::approximate);
}

// ---------------------------------------------------------------- duality

double duality_residual(const MarkovMatrix& p, const MapSpec& spec, const Density& f, const Observable& g,
                        int refinement) {
  require_same_space(p.space(), f.space(), "duality_residual");
  require_same_space(p.space(), g.space(), "duality_residual");
  if (refinement < 1) throw PreconditionError("refinement must be at least 1");
  const auto& space = *p.space();
  const double lhs = integrate(apply(p, f), g);
  const auto r = static_cast<std::size_t>(refinement);

  double rhs = 0.0;
  if (spec.dimension() == 2) {
    const std::size_t nx = space.nx();
    const std::size_t ny = space.ny();
    const double w = 1.0 / static_cast<double>(nx * ny * r * r);
    for (std::size_t i = 0; i < space.size(); ++i) {
      const std::size_t ix = i % nx;
      const std::size_t iy = i / nx;
      double acc = 0.0;
      for (std::size_t a = 0; a < r; ++a) {
        for (std::size_t b = 0; b < r; ++b) {
          const Point2 pt{(static_cast<double>(ix) + (static_cast<double>(a) + 0.5) / static_cast<double>(r)) /
                              static_cast<double>(nx),
                          (static_cast<double>(iy) + (static_cast<double>(b) + 0.5) / static_cast<double>(r)) /
                              static_cast<double>(ny)};
          const Point2 q = spec(pt);
          acc += g.value(cell_of(q[1], ny) * nx + cell_of(q[0], nx));
        }
      }
      rhs += f.value(i) * acc * w;
    }
  } else {
    const auto edges = cell_edges(space);
    for (std::size_t i = 0; i < space.size(); ++i) {
      const double h = (edges[i + 1] - edges[i]) / static_cast<double>(r);
      double acc = 0.0;
      for (std::size_t s = 0; s < r; ++s) {
        const double x = edges[i] + (static_cast<double>(s) + 0.5) * h;
        acc += g.value(locate(edges, spec(x)));
      }
      rhs += f.value(i) * acc * h;
    }
  }
  return std::abs(lhs - rhs);
}

double duality_residual_smooth(const MarkovMatrix& p, const MapSpec& spec, const std::function<double(double)>& f,
                               const std::function<double(double)>& g, int refinement) {
  if (refinement < 1) throw PreconditionError("refinement must be at least 1");
  if (spec.dimension() != 1) throw PreconditionError("smooth duality residual is implemented for interval maps");
  const auto& space = p.space();
  const auto edges = cell_edges(*space);
  const auto r = static_cast<std::size_t>(refinement);
  const auto n = space->size();

  Eigen::VectorXd f_avg(idx(n));
  Eigen::VectorXd g_avg(idx(n));
  double rhs = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double h = (edges[i + 1] - edges[i]) / static_cast<double>(r);
    double fs = 0.0;
    double gs = 0.0;
    for (std::size_t s = 0; s < r; ++s) {
      const double x = edges[i] + (static_cast<double>(s) + 0.5) * h;
      const double fx = f(x);
      fs += fx;
      gs += g(x);
      rhs += fx * g(spec(x)) * h;
    }
    f_avg[idx(i)] = fs / static_cast<double>(r);
    g_avg[idx(i)] = gs / static_cast<double>(r);
  }
  const double lhs = integrate(apply(p, Density(space, f_avg)), Observable(space, g_avg));
  return std::abs(lhs - rhs);
}

std::vector<std::size_t> block_cells(std::size_t cells, std::size_t blocks, std::size_t b) {
  if (blocks == 0 || blocks > cells) throw PreconditionError("block layout needs 1 <= blocks <= cells");
  if (b >= blocks) throw PreconditionError("block index out of range");
  const std::size_t base = cells / blocks;
  const std::size_t extra = cells % blocks;
  const std::size_t first = b * base + std::min(b, extra);
  const std::size_t size = base + (b < extra ? 1 : 0);
  std::vector<std::size_t> out(size);
  for (std::size_t k = 0; k < size; ++k) out[k] = first + k;
  return out;
}

MarkovMatrix block_cycle(const SpacePtr& space, std::size_t blocks, std::vector<std::size_t> order) {
  const std::size_t n = space->size();
  if (blocks == 0 || blocks > n) throw PreconditionError("block_cycle needs 1 <= blocks <= cells");
  if (order.empty()) {
    for (std::size_t i = 0; i < blocks; ++i) order.push_back((i + 1) % blocks);
  }
  if (order.size() != blocks) throw PreconditionError("block_cycle: order needs one target per block");
  for (std::size_t t : order) {
    if (t >= blocks) throw PreconditionError("block_cycle: target block out of range");
  }
  std::vector<Eigen::Triplet<double>> triplets;
  bool exact = true;
  for (std::size_t b = 0; b < blocks; ++b) {
    const auto target = block_cells(n, blocks, order[b]);
    const double share = 1.0 / static_cast<double>(target.size());
    exact = exact && std::has_single_bit(target.size());
    for (std::size_t i : block_cells(n, blocks, b)) {
      for (std::size_t j : target) {
        triplets.emplace_back(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j), share);
      }
    }
  }
  Kernel k(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  k.setFromTriplets(triplets.begin(), triplets.end());
  return MarkovMatrix(space, std::move(k), exact ? Representation::exact : Representation::approximate);
}

}  // namespace cocyclelab
