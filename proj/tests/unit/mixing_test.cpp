#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "cocyclelab/errors.hpp"
#include "cocyclelab/mixing.hpp"
#include "cocyclelab/transfer.hpp"

using namespace cocyclelab;

namespace {

DrivingPtr rotation(std::size_t q) { return std::make_shared<const DrivingSystem>(DrivingSystem::finite_rotation(q)); }

CocycleFamily constant_cocycle(const MarkovMatrix& p, std::size_t q = 1) {
  return CocycleFamily::constant(rotation(q), std::make_shared<const MarkovMatrix>(p));
}

// |lambda_2| of a row-stochastic kernel by power iteration on zero-sum
// mass vectors, which the kernel maps to zero-sum vectors.
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
  const int steps = 60;
  double log_growth = 0.0;
  for (int i = 0; i < steps; ++i) {
    Eigen::RowVectorXd w = v * k;
    w.array() -= w.mean();
    log_growth += std::log(w.norm());
    v = w / w.norm();
  }
  return std::exp(log_growth / steps);
}

}  // namespace

TEST(Notion, ParseAndPrint) {
  for (Notion n : {Notion::prior_hom, Notion::post_hom, Notion::prior_inhom, Notion::post_inhom}) {
    EXPECT_EQ(parse_notion(to_string(n)), n);
  }
  EXPECT_TRUE(is_prior(Notion::prior_inhom));
  EXPECT_FALSE(is_homogeneous(Notion::post_inhom));
  EXPECT_THROW(parse_notion("prior"), PreconditionError);
}

TEST(Correlation, ConstantObservableGivesZero) {
  auto s = FiniteMeasureSpace::uniform(8);
  const auto c = constant_cocycle(pf_exact(MapSpec::doubling(), s));
  const auto f = difference_basis(s)[2];
  for (int n = 0; n < 5; ++n) EXPECT_NEAR(correlation_hom(c, EnvPoint{0}, f, Observable::constant(s, 2.0), n), 0.0, 1e-15);
}

TEST(Correlation, DoublingFourCellsByHand) {
  auto s = FiniteMeasureSpace::uniform(4);
  const auto c = constant_cocycle(pf_exact(MapSpec::doubling(), s));
  Eigen::VectorXd mass(4);
  mass << 1, -1, 0, 0;
  const auto f = Density::from_mass(s, mass);
  const auto g = Observable::cell_indicator(s, 0);
  EXPECT_DOUBLE_EQ(correlation_hom(c, EnvPoint{0}, f, g, 0), 1.0);
  EXPECT_DOUBLE_EQ(correlation_hom(c, EnvPoint{0}, f, g, 1), 0.5);
  EXPECT_DOUBLE_EQ(correlation_hom(c, EnvPoint{0}, f, g, 2), 0.0);
}

TEST(Correlation, RequiresZeroMean) {
  auto s = FiniteMeasureSpace::uniform(4);
  const auto c = constant_cocycle(MarkovMatrix::identity(s));
  EXPECT_THROW(correlation_hom(c, EnvPoint{0}, Density::uniform(s), Observable::constant(s, 1.0), 1),
               PreconditionError);
}

TEST(Correlation, BakerCyclicOscillates) {
  const int bits = 4;
  const std::size_t n_cells = 16;
  auto s = FiniteMeasureSpace::uniform(n_cells);
  const auto c = constant_cocycle(pf_exact(MapSpec::baker_cyclic(bits), s));
  // A = {first bit 0} = the left half.
  Eigen::VectorXd fv(n_cells);
  std::vector<std::size_t> a;
  for (std::size_t i = 0; i < n_cells; ++i) {
    fv[static_cast<Eigen::Index>(i)] = i < n_cells / 2 ? 1.0 : -1.0;
    if (i < n_cells / 2) a.push_back(i);
  }
  const Density f(s, fv);
  const auto g = Observable::indicator(s, a);
  for (int n = 0; n <= 3 * bits; ++n) {
    // After n shifts the left half is {bit (n mod bits) + 1 = 0}, which is
    // independent of the first bit unless n is a multiple of bits.
    const double expected = n % bits == 0 ? 0.5 : 0.0;
    EXPECT_NEAR(correlation_hom(c, EnvPoint{0}, f, g, n), expected, 1e-15) << n;
  }
}

TEST(Correlation, InhomReducesToHom) {
  auto s = FiniteMeasureSpace::uniform(8);
  const auto c = constant_cocycle(pf_ulam(MapSpec::tent(), s, 500, 3));
  const auto f = difference_basis(s)[0];
  const auto g = Observable::cell_indicator(s, 3);
  for (int n = 0; n < 6; ++n) {
    EXPECT_DOUBLE_EQ(correlation_inhom(c, EnvPoint{0}, f, ObservableMap::homogeneous(g), n),
                     correlation_hom(c, EnvPoint{0}, f, g, n));
    EXPECT_EQ(correlation_inhom(c, EnvPoint{0}, f, ObservableMap::homogeneous(Observable::zero(s)), n), 0.0);
  }
}

TEST(Correlation, StepMapFollowsTheOrbit) {
  auto s = FiniteMeasureSpace::uniform(4);
  auto d = rotation(2);
  const auto c = CocycleFamily::constant(d, std::make_shared<const MarkovMatrix>(MarkovMatrix::identity(s)));
  Eigen::VectorXd mass(4);
  mass << 0.5, -0.5, 0, 0;
  const auto f = Density::from_mass(s, mass);
  const auto g = ObservableMap::step(d, {Observable::cell_indicator(s, 0), Observable::cell_indicator(s, 1)});
  // g_{sigma^n 0} alternates between the indicators of cells 0 and 1.
  EXPECT_DOUBLE_EQ(correlation_inhom(c, EnvPoint{0}, f, g, 0), 0.5);
  EXPECT_DOUBLE_EQ(correlation_inhom(c, EnvPoint{0}, f, g, 1), -0.5);
  EXPECT_DOUBLE_EQ(correlation_inhom(c, EnvPoint{1}, f, g, 2), -0.5);
}

TEST(ObservableMapTest, OrbitScheduleOffOrbit) {
  auto s = FiniteMeasureSpace::uniform(2);
  auto d = rotation(5);
  const auto g = ObservableMap::orbit_schedule(d, EnvPoint{1}, {Observable::constant(s, 1), Observable::constant(s, 2)});
  EXPECT_EQ(g.at(EnvPoint{2}).value(0), 2.0);
  EXPECT_THROW(g.at(EnvPoint{4}), ScheduleError);
}

TEST(Bases, DifferenceBasisIsZeroMean) {
  auto s = FiniteMeasureSpace::weighted({0.1, 0.2, 0.3, 0.4});
  const auto basis = difference_basis(s);
  ASSERT_EQ(basis.size(), 3u);
  for (const auto& f : basis) {
    EXPECT_TRUE(f.is_zero_mean());
    EXPECT_NEAR(f.l1_norm(), 1.0, 1e-15);
  }
  EXPECT_EQ(indicator_basis(s).size(), 4u);
  const auto d = std::make_shared<const DrivingSystem>(DrivingSystem::bernoulli_shift({0.5, 0.5}, 2, 1));
  EXPECT_EQ(step_indicator_maps(d, s).size(), 8u);
}

TEST(RateFit, ExactGeometric) {
  std::vector<double> curve;
  for (int n = 0; n <= 30; ++n) curve.push_back(3.0 * std::pow(0.4, n));
  const auto fit = fit_geometric_rate(curve);
  EXPECT_NEAR(fit.rate, 0.4, 1e-12);
  EXPECT_NEAR(fit.log_c, std::log(3.0), 1e-10);
  EXPECT_NEAR(fit.r_squared, 1.0, 1e-12);
  const std::vector<double> collapse = {1.0, 0.5, 0.0, 0.0};
  EXPECT_NEAR(fit_geometric_rate(collapse).rate, 0.5, 1e-12);
}

TEST(TailWindow, LastTenPercent) {
  EXPECT_EQ(tail_start(40), 37);
  EXPECT_EQ(tail_start(30), 28);
  EXPECT_EQ(tail_start(5), 5);
}

TEST(EstimateMixing, UlamDoublingDecaysAtSpectralRate) {
  auto s = FiniteMeasureSpace::uniform(64);
  const auto p = pf_ulam(MapSpec::doubling(), s, 1000, 8);
  const auto c = constant_cocycle(p);
  MixingOptions o;
  o.horizon = 30;
  o.tol = 1e-6;
  const auto r = estimate_mixing(c, Notion::prior_hom, difference_basis(s), homogeneous_maps(indicator_basis(s)),
                                 {EnvPoint{0}}, o);
  EXPECT_TRUE(r.decayed);
  const double oracle = second_eigenvalue(p.dense());
  EXPECT_LE(oracle, 0.6);
  EXPECT_LE(r.envelope_rate.rate, 0.6);
  EXPECT_NEAR(r.envelope_rate.rate, oracle, 0.1);
  EXPECT_EQ(r.f_count, 63u);
  EXPECT_EQ(r.g_count, 64u);
}

TEST(EstimateMixing, PermutationAndIdentityNeverDecay) {
  auto s = FiniteMeasureSpace::uniform(16);
  for (const auto& p : {pf_exact(MapSpec::baker_cyclic(4), s), MarkovMatrix::identity(s)}) {
    const auto c = constant_cocycle(p, 3);
    auto d = c.driving_ptr();
    for (Notion n : {Notion::prior_hom, Notion::post_hom, Notion::prior_inhom, Notion::post_inhom}) {
      MixingOptions o;
      o.horizon = 20;
      const auto g = is_homogeneous(n) ? homogeneous_maps(indicator_basis(s)) : step_indicator_maps(d, s);
      const auto r = estimate_mixing(c, n, difference_basis(s), g, d->all_points(), o);
      EXPECT_FALSE(r.decayed) << to_string(n);
    }
  }
}

TEST(EstimateMixing, FourNotionsOnTwoMapRotation) {
  auto s = FiniteMeasureSpace::uniform(32);
  auto d = rotation(2);
  const CocycleFamily c(d, s,
                        {std::make_shared<const MarkovMatrix>(pf_exact(MapSpec::doubling(), s)),
                         std::make_shared<const MarkovMatrix>(pf_ulam(MapSpec::tent(), s, 1000, 2))});
  MixingOptions o;
  o.horizon = 40;
  o.keep_curves = true;
  std::vector<MixingReport> reports;
  for (Notion n : {Notion::prior_hom, Notion::post_hom, Notion::prior_inhom, Notion::post_inhom}) {
    const auto g = is_homogeneous(n) ? homogeneous_maps(indicator_basis(s)) : step_indicator_maps(d, s);
    reports.push_back(estimate_mixing(c, n, difference_basis(s), g, d->all_points(), o));
    EXPECT_TRUE(reports.back().decayed);
    EXPECT_EQ(reports.back().curves.size(), 2 * 31 * reports.back().g_count);
  }
  EXPECT_EQ(reports[0].omega_thresholds.size(), 2u);
  EXPECT_EQ(reports[1].pair_thresholds.size(), 31u * 32u);

  // The stored curves are the correlation functionals.
  const auto f = difference_basis(s)[4];
  const auto g = Observable::cell_indicator(s, 7);
  const auto& curve = reports[0].curves[(1 * 31 + 4) * 32 + 7];
  for (int n = 0; n <= 40; n += 7) {
    EXPECT_NEAR(curve[static_cast<std::size_t>(n)], correlation_hom(c, EnvPoint{1}, f, g, n), 1e-15);
  }
}

TEST(EstimateMixing, Preconditions) {
  auto s = FiniteMeasureSpace::uniform(4);
  const auto c = constant_cocycle(MarkovMatrix::identity(s), 2);
  MixingOptions o;
  EXPECT_THROW(estimate_mixing(c, Notion::prior_hom, {Density::uniform(s)}, homogeneous_maps(indicator_basis(s)),
                               {EnvPoint{0}}, o),
               PreconditionError);
  EXPECT_THROW(estimate_mixing(c, Notion::prior_hom, difference_basis(s), step_indicator_maps(c.driving_ptr(), s),
                               {EnvPoint{0}}, o),
               PreconditionError);
  EXPECT_THROW(estimate_mixing(c, Notion::prior_hom, {}, homogeneous_maps(indicator_basis(s)), {EnvPoint{0}}, o),
               PreconditionError);
}

TEST(Counterexample, HalfAtEveryStep) {
  const auto r = orbit_counterexample(8, 16);
  EXPECT_EQ(r.cells, 65536u);
  for (int n = 1; n <= 16; ++n) {
    const auto i = static_cast<std::size_t>(n);
    EXPECT_NEAR(r.inhomogeneous[i], 0.5, 1e-12);
    EXPECT_EQ(r.overlap[i], 0.0);
    EXPECT_NEAR(r.square_integral[i], 0.5, 1e-12);
  }
  EXPECT_TRUE(r.disjoint);
  EXPECT_TRUE(r.inhomogeneous_constant);
}

TEST(Counterexample, HomogeneousContrastMatchesBitCount) {
  const int k = 3;
  const auto r = orbit_counterexample(k, 2 * k);
  // With f = 1_A - 1_{X\A}, the fixed observable 1_A sees 1/2 exactly
  // when the shifted first bit returns to the front.
  for (int n = 0; n <= 2 * k; ++n) {
    EXPECT_NEAR(r.homogeneous_fixed_a[static_cast<std::size_t>(n)], n % (2 * k) == 0 ? 0.5 : 0.0, 1e-15) << n;
  }
}

TEST(Counterexample, Limits) {
  EXPECT_THROW(orbit_counterexample(4, 9), HorizonError);
  EXPECT_THROW(orbit_counterexample(1, 2), PreconditionError);
}
