#include <gtest/gtest.h>

#include "cocyclelab/errors.hpp"
#include "cocyclelab/exactness.hpp"
#include "cocyclelab/mixing.hpp"
#include "cocyclelab/transfer.hpp"

using namespace cocyclelab;

namespace {

CocycleFamily constant_cocycle(const MarkovMatrix& p) {
  return CocycleFamily::constant(std::make_shared<const DrivingSystem>(DrivingSystem::finite_rotation(1)),
                                 std::make_shared<const MarkovMatrix>(p));
}

}  // namespace

TEST(ExactnessNorms, DoublingFourCellsPlateauThenCollapse) {
  auto s = FiniteMeasureSpace::uniform(4);
  const auto c = constant_cocycle(pf_exact(MapSpec::doubling(), s));
  Eigen::VectorXd mass(4);
  mass << 1, -1, 0, 0;
  const auto r = exactness_norms(c, EnvPoint{0}, {Density::from_mass(s, mass)}, 6, 1e-8);
  const std::vector<double> expected = {2, 2, 0, 0, 0, 0, 0};
  EXPECT_EQ(r.curves.front(), expected);
  EXPECT_TRUE(r.decayed);
  EXPECT_EQ(r.max_increase, 0.0);
}

TEST(ExactnessNorms, IsometriesKeepTheNorm) {
  auto s = FiniteMeasureSpace::uniform(16);
  for (const auto& p : {MarkovMatrix::identity(s), pf_exact(MapSpec::baker_cyclic(4), s)}) {
    const auto c = constant_cocycle(p);
    const auto basis = difference_basis(s);
    const auto r = exactness_norms(c, EnvPoint{0}, basis, 20, 1e-8);
    EXPECT_FALSE(r.decayed);
    for (const auto& curve : r.curves) {
      for (double v : curve) EXPECT_DOUBLE_EQ(v, 1.0);
    }
  }
}

TEST(ExactnessNorms, RejectsNonZeroMean) {
  auto s = FiniteMeasureSpace::uniform(4);
  const auto c = constant_cocycle(MarkovMatrix::identity(s));
  EXPECT_THROW(exactness_norms(c, EnvPoint{0}, {Density::uniform(s)}, 3, 1e-8), PreconditionError);
}

TEST(LinDualBall, DoublingFourCells) {
  auto s = FiniteMeasureSpace::uniform(4);
  const auto c = constant_cocycle(pf_exact(MapSpec::doubling(), s));
  const auto r = lin_dual_ball(c, EnvPoint{0}, 5, 1e-8);
  // Cell indicators have sup-distance 3/4 from their mean 1/4.
  EXPECT_DOUBLE_EQ(r.diameter[0], 0.75);
  EXPECT_DOUBLE_EQ(r.diameter[1], 0.25);
  EXPECT_EQ(r.diameter[2], 0.0);
  EXPECT_TRUE(r.trivial);
}

TEST(LinDualBall, PermutationKeepsIndicators) {
  auto s = FiniteMeasureSpace::uniform(16);
  for (const auto& p : {MarkovMatrix::identity(s), pf_exact(MapSpec::baker_cyclic(4), s)}) {
    const auto r = lin_dual_ball(constant_cocycle(p), EnvPoint{0}, 12, 1e-8);
    for (double v : r.diameter) EXPECT_DOUBLE_EQ(v, 15.0 / 16.0);
    EXPECT_FALSE(r.trivial);
  }
}

TEST(TailPartition, BakerKeepsEveryCell) {
  auto s = FiniteMeasureSpace::uniform(64);
  const auto r = tail_partition_trivial(constant_cocycle(pf_exact(MapSpec::baker_cyclic(6), s)), EnvPoint{0}, 12);
  for (auto atoms : r.atoms) EXPECT_EQ(atoms, 64u);
  EXPECT_FALSE(r.trivial);
}

TEST(TailPartition, OneCellSpaceIsTrivial) {
  auto s = FiniteMeasureSpace::uniform(1);
  EXPECT_TRUE(tail_partition_trivial(constant_cocycle(MarkovMatrix::identity(s)), EnvPoint{0}, 3).trivial);
}

TEST(TailPartition, ConstantMapCollapsesInOneStep) {
  auto s = FiniteMeasureSpace::uniform(8);
  const auto r = tail_partition_trivial(constant_cocycle(pf_exact(MapSpec::constant(), s)), EnvPoint{0}, 4);
  EXPECT_EQ(r.atoms[0], 8u);
  EXPECT_EQ(r.atoms[1], 1u);
  EXPECT_TRUE(r.trivial);
}

TEST(TailPartition, RejectsNonMapOperators) {
  auto s = FiniteMeasureSpace::uniform(4);
  EXPECT_THROW(tail_partition_trivial(constant_cocycle(pf_exact(MapSpec::doubling(), s)), EnvPoint{0}, 3),
               PreconditionError);
}

TEST(SignWitness, MatchesNorm) {
  auto s = FiniteMeasureSpace::uniform(32);
  const auto c = constant_cocycle(pf_ulam(MapSpec::tent(), s, 300, 5));
  for (const auto& f : difference_basis(s)) {
    for (int n : {0, 1, 5, 11}) EXPECT_LE(sign_witness_gap(c, EnvPoint{0}, f, n), 1e-14);
  }
}

TEST(AssessExactness, VerdictsAgree) {
  struct Case {
    MarkovMatrix p;
    bool exact;
  };
  auto s = FiniteMeasureSpace::uniform(64);
  const std::vector<Case> cases = {{pf_exact(MapSpec::doubling(), s), true},
                                   {pf_exact(MapSpec::baker_cyclic(6), s), false},
                                   {MarkovMatrix::identity(s), false},
                                   {block_cycle(s, 2), false},
                                   {pf_exact(MapSpec::constant(), s), true}};
  for (const auto& k : cases) {
    const auto c = constant_cocycle(k.p);
    const auto r = assess_exactness(c, {EnvPoint{0}}, difference_basis(s), ExactnessOptions{});
    EXPECT_EQ(r.norm_exact, k.exact);
    EXPECT_EQ(r.lin_exact, k.exact);
    EXPECT_TRUE(r.agree);
    EXPECT_LE(r.witness_gap, 1e-12);
    if (k.p.is_cell_map()) {
      ASSERT_TRUE(r.tail_exact.has_value());
      EXPECT_EQ(*r.tail_exact, k.exact);
    } else {
      EXPECT_FALSE(r.tail_exact.has_value());
    }
  }
}
