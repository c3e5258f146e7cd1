#include <gtest/gtest.h>

#include "cocyclelab/asymp.hpp"
#include "cocyclelab/errors.hpp"
#include "cocyclelab/mixing.hpp"
#include "cocyclelab/transfer.hpp"

using namespace cocyclelab;

namespace {

DrivingPtr rotation(std::size_t q) { return std::make_shared<const DrivingSystem>(DrivingSystem::finite_rotation(q)); }

CocycleFamily constant_cocycle(const MarkovMatrix& p, std::size_t q = 1) {
  return CocycleFamily::constant(rotation(q), std::make_shared<const MarkovMatrix>(p));
}

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

}  // namespace

TEST(Permutations, Notation) {
  EXPECT_EQ(cycle_notation({1, 0, 2}), "(1 2)(3)");
  EXPECT_EQ(cycle_notation({1, 2, 0}), "(1 2 3)");
  EXPECT_EQ(cycle_notation({0}), "(1)");
  EXPECT_EQ(compose_permutations({1, 2, 0}, {1, 2, 0}), (Permutation{2, 0, 1}));
  EXPECT_EQ(permutation_order({1, 0, 3, 4, 2}), 6);
  EXPECT_EQ(permutation_order({0, 1}), 1);
}

TEST(BurnIn, Default) {
  EXPECT_EQ(default_burn_in(64, 40), 12);
  EXPECT_EQ(default_burn_in(1024, 40), 20);
  EXPECT_EQ(default_burn_in(4, 2), 1);
}

TEST(DetectPeriodicity, BlockSwap) {
  auto s = FiniteMeasureSpace::uniform(4);
  const auto c = constant_cocycle(block_cycle(s, 2));
  const auto r = detect_periodicity(c, {EnvPoint{0}}, PeriodicityOptions{});
  ASSERT_EQ(r.status, PeriodicityStatus::found);
  const auto& d = *r.decomposition;
  EXPECT_EQ(d.r, 2);
  EXPECT_EQ(d.residual, 0.0);
  EXPECT_FALSE(stability_check(d));
  const auto& fiber = d.fibers.front();
  EXPECT_EQ(fiber.rho, (Permutation{1, 0}));
  EXPECT_EQ(fiber.g[0].values(), vec({2, 2, 0, 0}));
  EXPECT_EQ(fiber.g[1].values(), vec({0, 0, 2, 2}));
  // lambda_i(f) is the mass of f in block i.
  const Density f = Density::from_mass(s, vec({0.1, 0.2, 0.3, 0.4}));
  EXPECT_NEAR(integrate(f, fiber.lambda[0]), 0.3, 1e-15);
  EXPECT_NEAR(integrate(f, fiber.lambda[1]), 0.7, 1e-15);
  EXPECT_EQ(d.lambda_sum_defect, 0.0);

  // One step already lands in the span of the g_i.
  PeriodicityOptions one;
  one.horizon = 1;
  one.burn_in = 1;
  const auto r1 = detect_periodicity(c, {EnvPoint{0}}, one);
  ASSERT_EQ(r1.status, PeriodicityStatus::found);
  EXPECT_EQ(r1.decomposition->residual, 0.0);

  const auto h = invariant_density_from_decomposition(c, d, 0);
  EXPECT_EQ(h.values(), vec({1, 1, 1, 1}));
}

TEST(DetectPeriodicity, DoublingIsStable) {
  auto s = FiniteMeasureSpace::uniform(64);
  const auto c = constant_cocycle(pf_exact(MapSpec::doubling(), s));
  const auto r = detect_periodicity(c, {EnvPoint{0}}, PeriodicityOptions{});
  ASSERT_EQ(r.status, PeriodicityStatus::found);
  const auto& d = *r.decomposition;
  EXPECT_EQ(d.r, 1);
  EXPECT_TRUE(stability_check(d));
  EXPECT_EQ(d.fibers.front().rho, (Permutation{0}));
  EXPECT_TRUE(d.fibers.front().g[0].values().isApprox(Eigen::VectorXd::Ones(64), 1e-15));
  EXPECT_TRUE(invariant_density_from_decomposition(c, d, 0).values().isApprox(Eigen::VectorXd::Ones(64), 1e-15));
}

TEST(DetectPeriodicity, IdentityHasNone) {
  auto s = FiniteMeasureSpace::uniform(16);
  PeriodicityOptions o;
  o.r_max = 4;
  const auto r = detect_periodicity(constant_cocycle(MarkovMatrix::identity(s)), {EnvPoint{0}}, o);
  EXPECT_EQ(r.status, PeriodicityStatus::none_found);
  EXPECT_FALSE(r.decomposition.has_value());
  EXPECT_EQ(r.components, 16);
}

TEST(DetectPeriodicity, PlantedCycles) {
  for (std::size_t blocks : {1u, 2u, 3u}) {
    auto s = FiniteMeasureSpace::uniform(12);
    const auto c = constant_cocycle(block_cycle(s, blocks));
    const auto r = detect_periodicity(c, {EnvPoint{0}}, PeriodicityOptions{});
    ASSERT_EQ(r.status, PeriodicityStatus::found);
    EXPECT_EQ(r.decomposition->r, static_cast<int>(blocks));
    EXPECT_LT(r.decomposition->residual, 1e-10);
    EXPECT_EQ(permutation_order(r.decomposition->fibers.front().rho), static_cast<int>(blocks));
  }
}

TEST(DetectPeriodicity, RandomEnvironmentPermutation) {
  // Over a rotation of two points, the two operators cycle three blocks in
  // opposite directions.
  auto s = FiniteMeasureSpace::uniform(12);
  auto fwd = std::make_shared<const MarkovMatrix>(block_cycle(s, 3, {1, 2, 0}));
  auto back = std::make_shared<const MarkovMatrix>(block_cycle(s, 3, {2, 0, 1}));
  const CocycleFamily c(rotation(2), s, {fwd, back});
  const auto r = detect_periodicity(c, c.driving().all_points(), PeriodicityOptions{});
  ASSERT_EQ(r.status, PeriodicityStatus::found);
  const auto& d = *r.decomposition;
  EXPECT_EQ(d.r, 3);
  EXPECT_TRUE(d.chain_consistent);
  EXPECT_FALSE(d.rho_constant);
  EXPECT_EQ(compose_permutations(d.fibers[0].rho, d.fibers[1].rho), (Permutation{0, 1, 2}));
  EXPECT_LE(d.equivariance_defect, 1e-12);
}

TEST(DetectPeriodicity, Preconditions) {
  auto s = FiniteMeasureSpace::uniform(4);
  const auto c = constant_cocycle(MarkovMatrix::identity(s));
  PeriodicityOptions o;
  o.r_max = 0;
  EXPECT_THROW(detect_periodicity(c, {EnvPoint{0}}, o), PreconditionError);
  EXPECT_THROW(detect_periodicity(c, {}, PeriodicityOptions{}), PreconditionError);
}

TEST(QuasiConstrictive, BlockCycleDensityBound) {
  auto s = FiniteMeasureSpace::uniform(256);
  const auto c = constant_cocycle(block_cycle(s, 2));
  QcOptions o;
  o.eps = {0.1};
  const auto r = quasi_constrictive_probe(c, {EnvPoint{0}}, o);
  ASSERT_EQ(r.rows.size(), 1u);
  const auto& row = r.rows.front();
  EXPECT_TRUE(row.resolved);
  EXPECT_TRUE(row.passed);
  // Iterated densities are bounded by 2, so every E with m(E) < eps / 2 works.
  EXPECT_GE(row.delta, 0.05);
  EXPECT_TRUE(r.quasi_constrictive);
}

TEST(QuasiConstrictive, IdentityPointMassPersists) {
  auto s = FiniteMeasureSpace::uniform(64);
  const auto c = constant_cocycle(MarkovMatrix::identity(s));
  QcOptions o;
  o.eps = {0.5, 0.2};
  const auto r = quasi_constrictive_probe(c, {EnvPoint{0}}, o);
  for (const auto& row : r.rows) {
    EXPECT_TRUE(row.resolved);
    EXPECT_FALSE(row.passed);
    EXPECT_NEAR(row.witness_value, 1.0, 1e-15);
    EXPECT_EQ(row.witness.size(), 1u);
  }
  EXPECT_FALSE(r.quasi_constrictive);
}

TEST(QuasiConstrictive, DoublingUniformizes) {
  auto s = FiniteMeasureSpace::uniform(64);
  const auto c = constant_cocycle(pf_exact(MapSpec::doubling(), s));
  QcOptions o;
  o.eps = {0.5, 0.2};
  const auto r = quasi_constrictive_probe(c, {EnvPoint{0}}, o);
  for (const auto& row : r.rows) {
    EXPECT_TRUE(row.passed);
    EXPECT_GE(row.delta, row.eps);
  }
}

TEST(RestrictPower, BlockSwapSquareIsExactOnEachBlock) {
  auto s = FiniteMeasureSpace::uniform(4);
  const auto c = constant_cocycle(block_cycle(s, 2));
  const auto rc = restrict_power(c, 2, {0, 1});
  EXPECT_EQ(rc.cells, (std::vector<std::size_t>{0, 1}));
  EXPECT_EQ(rc.cocycle->size(), 2u);
  const auto rs = rc.cocycle->space();
  const auto norms = exactness_norms(*rc.cocycle, EnvPoint{0}, difference_basis(rs), 3, 1e-12);
  EXPECT_EQ(norms.curves.front()[1], 0.0);
  EXPECT_THROW(restrict_power(c, 1, {0, 1}), PreconditionError);
}

TEST(RestrictPower, BernoulliDrivingUsesWords) {
  auto s = FiniteMeasureSpace::uniform(8);
  auto d = std::make_shared<const DrivingSystem>(DrivingSystem::bernoulli_shift({0.5, 0.5}, 4, 5));
  // Both operators swap the halves: one spreads uniformly, one shifts cells.
  Eigen::MatrixXd shift = Eigen::MatrixXd::Zero(8, 8);
  for (int i = 0; i < 8; ++i) shift(i, (i + 4) % 8) = 1.0;
  const CocycleFamily c(d, s,
                        {std::make_shared<const MarkovMatrix>(block_cycle(s, 2)),
                         std::make_shared<const MarkovMatrix>(MarkovMatrix::from_dense(s, shift))});
  const auto rc = restrict_power(c, 2, {0, 1, 2, 3});
  EXPECT_EQ(rc.cocycle->driving().feature_count(), 4u);
  const auto w = d->sample(1, 3).front();
  const Eigen::MatrixXd direct = compose(c, w, 2).dense().topLeftCorner(4, 4);
  EXPECT_TRUE(rc.cocycle->at(w).dense().isApprox(direct, 1e-15));
}
