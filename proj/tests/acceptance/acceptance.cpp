// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cocyclelab/asymp.hpp"
#include "cocyclelab/exactness.hpp"
#include "cocyclelab/mixing.hpp"
#include "cocyclelab/scenario.hpp"
#include "cocyclelab/skewprod.hpp"
#include "cocyclelab/transfer.hpp"

#ifndef COCYCLELAB_SOURCE_DIR
#define COCYCLELAB_SOURCE_DIR "."
#endif

using namespace cocyclelab;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

DrivingPtr rotation(std::size_t q) { return std::make_shared<const DrivingSystem>(DrivingSystem::finite_rotation(q)); }

CocycleFamily constant_cocycle(MarkovMatrix p, DrivingPtr d = rotation(1)) {
  return CocycleFamily::constant(std::move(d), std::make_shared<const MarkovMatrix>(std::move(p)));
}

std::vector<std::size_t> range(std::size_t from, std::size_t to) {
  std::vector<std::size_t> out;
  for (std::size_t i = from; i < to; ++i) out.push_back(i);
  return out;
}

// |lambda_2| by power iteration on zero-sum mass vectors.
double second_eigenvalue(const Eigen::MatrixXd& k) {
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> nd;
  Eigen::RowVectorXd v(k.rows());
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = nd(rng);
  v.array() -= v.mean();
  for (int i = 0; i < 300; ++i) {
    v = v * k;
    v.array() -= v.mean();
    v /= v.norm();
  }
  double log_growth = 0.0;
  for (int i = 0; i < 60; ++i) {
    Eigen::RowVectorXd w = v * k;
    w.array() -= w.mean();
    log_growth += std::log(w.norm());
    v = w / w.norm();
  }
  return std::exp(log_growth / 60);
}

Outcome counterexample() {
  Outcome o;
  const auto r = orbit_counterexample(8, 16);
  double worst = 0.0;
  for (int n = 1; n <= 16; ++n) worst = std::max(worst, std::abs(r.inhomogeneous[static_cast<std::size_t>(n)] - 0.5));
  o.pass = worst <= 1e-12 && r.disjoint;
  std::ostringstream d;
  d << "max |corr - 0.5| = " << worst << ", supports disjoint " << (r.disjoint ? "yes" : "no");
  o.detail = d.str();
  return o;
}

Outcome exactness_agreement() {
  struct Case {
    std::string name;
    CocycleFamily c;
    bool expected;
  };
  auto s1024 = FiniteMeasureSpace::uniform(1024);
  auto s65536 = FiniteMeasureSpace::uniform(65536);
  auto s64 = FiniteMeasureSpace::uniform(64);
  auto s4 = FiniteMeasureSpace::uniform(4);
  const std::vector<Case> cases = {
      {"doubling N=1024", constant_cocycle(pf_exact(MapSpec::doubling(), s1024)), true},
      {"baker_cyclic k=8", constant_cocycle(pf_exact(MapSpec::baker_cyclic(16), s65536)), false},
      {"identity N=64", constant_cocycle(MarkovMatrix::identity(s64)), false},
      {"block-swap N=4", constant_cocycle(block_cycle(s4, 2)), false}};
  Outcome o;
  std::ostringstream d;
  for (const auto& k : cases) {
    ExactnessOptions eo;
    eo.horizon = 40;
    eo.tol = 1e-8;
    const auto r = assess_exactness(k.c, {EnvPoint{0}}, difference_block(k.c.space()), eo);
    const bool tail_ok = !r.tail_exact || *r.tail_exact == r.lin_exact;
    const bool ok = r.agree && tail_ok && r.norm_exact == k.expected;
    o.pass = o.pass && ok;
    d << k.name << ": norm " << r.norm_exact << " lin " << r.lin_exact << " tail "
      << (r.tail_exact ? (*r.tail_exact ? "1" : "0") : "-") << (ok ? "" : " MISMATCH") << "; ";
  }
  o.detail = d.str();
  return o;
}

Outcome mixing_agreement() {
  Outcome o;
  std::ostringstream d;
  const std::filesystem::path dir = std::filesystem::path(COCYCLELAB_SOURCE_DIR) / "scenarios";
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.path().extension() == ".json") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  int checked = 0;
  for (const auto& file : files) {
    const Scenario s = load_scenario(file);
    if (!s.driving->is_finite()) continue;
    const auto omegas = scenario_omegas(s, 64);
    std::vector<bool> verdicts;
    for (Notion n : {Notion::prior_hom, Notion::post_hom, Notion::prior_inhom, Notion::post_inhom}) {
      MixingOptions mo;
      mo.horizon = 40;
      mo.tol = 1e-6;
      mo.per_curve_rates = false;
      const auto g = is_homogeneous(n) ? homogeneous_maps(indicator_basis(s.space))
                                       : step_indicator_maps(s.driving, s.space);
      verdicts.push_back(estimate_mixing(*s.cocycle, n, difference_basis(s.space), g, omegas, mo).decayed);
    }
    const bool same = verdicts[0] == verdicts[1] && verdicts[1] == verdicts[2] && verdicts[2] == verdicts[3];
    o.pass = o.pass && same;
    d << s.name << " " << (verdicts[0] ? "mixing" : "not mixing") << (same ? "" : " DISAGREE") << "; ";
    ++checked;
  }
  if (checked == 0) o.pass = false;
  o.detail = d.str();
  return o;
}

Outcome planted_cycles() {
  Outcome o;
  std::ostringstream d;
  for (std::size_t n : {4u, 8u, 12u}) {
    for (std::size_t r : {1u, 2u, 3u}) {
      auto s = FiniteMeasureSpace::uniform(n);
      const auto c = constant_cocycle(block_cycle(s, r));
      const auto res = detect_periodicity(c, {EnvPoint{0}}, PeriodicityOptions{});
      Permutation expected(r);
      for (std::size_t i = 0; i < r; ++i) expected[i] = (i + 1) % r;
      ExactnessOptions eo;
      const bool exact = assess_exactness(c, {EnvPoint{0}}, difference_basis(s), eo).norm_exact;
      bool ok = res.status == PeriodicityStatus::found;
      if (ok) {
        const auto& dec = *res.decomposition;
        ok = dec.r == static_cast<int>(r) && dec.fibers.front().rho == expected && dec.residual < 1e-10 &&
             stability_check(dec) == exact;
      }
      o.pass = o.pass && ok;
      if (!ok) d << "N=" << n << " r=" << r << " failed; ";
    }
  }
  if (o.pass) d << "9 planted cycles recovered, r=1 iff exact";
  o.detail = d.str();
  return o;
}

Outcome restricted_block_swap() {
  Outcome o;
  auto s = FiniteMeasureSpace::uniform(4);
  const auto c = constant_cocycle(block_cycle(s, 2));
  std::ostringstream d;
  for (const auto& block : {std::vector<std::size_t>{0, 1}, std::vector<std::size_t>{2, 3}}) {
    const auto rc = restrict_power(c, 2, block);
    const auto norms = exactness_norms(*rc.cocycle, EnvPoint{0}, difference_basis(rc.cocycle->space()), 4, 1e-12);
    double after_one = 0.0;
    for (const auto& curve : norms.curves) after_one = std::max(after_one, curve[1]);
    o.pass = o.pass && after_one == 0.0;
    d << "block {" << block[0] << "," << block[1] << "} norm after one step " << after_one << "; ";
  }
  o.detail = d.str();
  return o;
}

Outcome skew_bernoulli() {
  Outcome o;
  auto s = FiniteMeasureSpace::uniform(256);
  auto d = std::make_shared<const DrivingSystem>(DrivingSystem::bernoulli_shift({0.5, 0.5}, 8, 21));
  auto c = std::make_shared<const CocycleFamily>(
      CocycleFamily::constant(d, std::make_shared<const MarkovMatrix>(pf_ulam(MapSpec::doubling(), s, 1000, 22))));
  const auto h = InvariantDensityMap::build(c, d->sample(4, 1));
  SkewOptions so;
  so.horizon = 30;
  const auto left = range(0, 128);
  const auto curve = skew_mixing_curve(*c, h, ProductSet::rectangle(EnvSet::cylinder(Cylinder{0, {0}}), left),
                                       ProductSet::rectangle(EnvSet::cylinder(Cylinder{0, {1}}), left), so);
  const double disc30 = std::abs(curve.discrepancy[30]);

  const Cylinder wide_a{0, {0, 1, 1}};
  const Cylinder wide_b{0, {1, 0}};
  const auto wide = skew_mixing_curve(*c, h, ProductSet::rectangle(EnvSet::cylinder(wide_a), range(0, 64)),
                                      ProductSet::rectangle(EnvSet::cylinder(wide_b), range(64, 256)), so);
  double factor_gap = 0.0;
  for (std::size_t n = 0; n <= 30; ++n) {
    if (n > 2) factor_gap = std::max(factor_gap, wide.env_factorization_gap[n]);
  }
  for (std::size_t n = 1; n <= 30; ++n) factor_gap = std::max(factor_gap, curve.env_factorization_gap[n]);
  o.pass = disc30 < 1e-3 && factor_gap == 0.0;
  std::ostringstream out;
  out << "|discrepancy(30)| = " << disc30 << ", env factorization gap beyond width " << factor_gap;
  o.detail = out.str();
  return o;
}

Outcome random_operators() {
  Outcome o;
  std::mt19937_64 rng(20261016);
  std::uniform_int_distribution<int> size(2, 24);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> nd;
  double conservation = 0.0, positivity = 0.0, contraction = 0.0, bilinear = 0.0, adjoint = 0.0;
  const int trials = 10000;
  for (int t = 0; t < trials; ++t) {
    const int n = size(rng);
    std::vector<double> w(static_cast<std::size_t>(n));
    double total = 0.0;
    for (double& x : w) total += (x = 0.1 + unit(rng));
    for (double& x : w) x /= total;
    // Rounding can leave the weights off by an ulp; fold it into the first cell.
    double sum = 0.0;
    for (std::size_t i = 1; i < w.size(); ++i) sum += w[i];
    w[0] = 1.0 - sum;
    auto s = FiniteMeasureSpace::weighted(w);
    Eigen::MatrixXd k(n, n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) k(i, j) = unit(rng) < 0.4 ? 0.0 : unit(rng);
      k(i, i) += 1e-3;
      k.row(i) /= k.row(i).sum();
    }
    const auto p = MarkovMatrix::from_dense(s, k);
    Eigen::VectorXd fv(n), hv(n), gv(n), pos(n);
    for (int i = 0; i < n; ++i) {
      fv[i] = nd(rng);
      hv[i] = nd(rng);
      gv[i] = 2 * unit(rng) - 1;
      pos[i] = unit(rng);
    }
    const Density f(s, fv), hh(s, hv), fp(s, pos);
    const Observable g(s, gv);
    const Density pf = apply(p, f);
    conservation = std::max(conservation, std::abs(pf.total_mass() - f.total_mass()));
    positivity = std::max(positivity, std::max(0.0, -apply(p, fp).values().minCoeff()));
    contraction = std::max(contraction, std::max(0.0, pf.l1_norm() - f.l1_norm()));
    const double a = nd(rng), b = nd(rng);
    bilinear = std::max(bilinear, (apply(p, f * a + hh * b) - (pf * a + apply(p, hh) * b)).l1_norm());
    adjoint = std::max(adjoint, std::abs(integrate(pf, g) - integrate(f, dual_apply(p, g))));
  }
  const double worst = std::max({conservation, positivity, contraction, bilinear, adjoint});
  o.pass = worst <= 1e-10;
  std::ostringstream d;
  d << trials << " triples; conservation " << conservation << ", positivity " << positivity << ", contraction "
    << contraction << ", bilinearity " << bilinear << ", adjoint " << adjoint;
  o.detail = d.str();
  return o;
}

Outcome refinement_and_rate() {
  Outcome o;
  const auto spec = MapSpec::doubling();
  const auto f = [](double x) { return 1.0 + std::cos(2 * std::acos(-1.0) * x); };
  const auto g = [](double x) { return x * x; };
  const auto p64 = pf_ulam(spec, FiniteMeasureSpace::uniform(64), 2000, 1);
  const auto p256 = pf_ulam(spec, FiniteMeasureSpace::uniform(256), 2000, 1);
  const double r64 = duality_residual_smooth(p64, spec, f, g, 16);
  const double r256 = duality_residual_smooth(p256, spec, f, g, 16);

  auto s = p64.space();
  const auto c = constant_cocycle(p64);
  MixingOptions mo;
  mo.horizon = 30;
  mo.tol = 1e-6;
  mo.per_curve_rates = false;
  const auto rep = estimate_mixing(c, Notion::prior_hom, difference_basis(s), homogeneous_maps(indicator_basis(s)),
                                   {EnvPoint{0}}, mo);
  const double oracle = second_eigenvalue(p64.dense());
  const double fitted = rep.envelope_rate.rate;
  o.pass = r256 < r64 && fitted <= 0.6 && oracle <= 0.6 && std::abs(fitted - oracle) <= 0.1 && rep.decayed;
  std::ostringstream d;
  d << "residual N=64 " << r64 << " -> N=256 " << r256 << "; fitted rate " << fitted << ", power iteration "
    << oracle;
  o.detail = d.str();
  return o;
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    std::string name;
    double budget_seconds;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "counterexample correlation 1/2", 1.0, counterexample},
      {2, "exactness criteria agree", 30.0, exactness_agreement},
      {3, "four mixing notions agree on shipped scenarios", 120.0, mixing_agreement},
      {4, "planted block cycles recovered", 30.0, planted_cycles},
      {5, "restricted block-swap square is exact", 5.0, restricted_block_swap},
      {6, "skew product over Bernoulli driving", 60.0, skew_bernoulli},
      {7, "random operator properties", 30.0, random_operators},
      {8, "duality refinement and spectral rate", 60.0, refinement_and_rate},
  };
  bool all = true;
  for (const auto& c : criteria) {
    const auto start = Clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double seconds = std::chrono::duration<double>(Clock::now() - start).count();
    const bool in_time = seconds < c.budget_seconds;
    const bool pass = o.pass && in_time;
    all = all && pass;
    std::printf("criterion %d %s: %s (%.3f s of %.0f s) %s\n", c.id, c.name.c_str(), pass ? "PASS" : "FAIL", seconds,
                c.budget_seconds, o.detail.c_str());
    std::fflush(stdout);
  }
  return all ? 0 : 1;
}
