#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"

using namespace abflow;

namespace {

ComplexMatrix col(std::initializer_list<double> v) {
  ComplexMatrix m(static_cast<Index>(v.size()), 1);
  Index i = 0;
  for (double x : v) m(i++, 0) = x;
  return m;
}

}  // namespace

TEST(MakeMatrix, RowMajorAndValidated) {
  const Complex entries[] = {1.0, 2.0, 3.0, Complex(4.0, -1.0)};
  const ComplexMatrix m = make_matrix(2, 2, entries);
  EXPECT_EQ(m(0, 1), Complex(2.0));
  EXPECT_EQ(m(1, 1), Complex(4.0, -1.0));
  EXPECT_THROW(make_matrix(3, 1, entries), ShapeError);
  const Complex bad[] = {std::nan("")};
  EXPECT_THROW(make_matrix(1, 1, bad), InvalidArgument);
}

TEST(FromReal, RejectsRaggedRows) {
  EXPECT_THROW(from_real({{1.0, 2.0}, {3.0}}), ShapeError);
}

TEST(LuSolve, Scalar) {
  EXPECT_NEAR(std::abs(lu_solve(from_real({{2}}), from_real({{6}}))(0, 0) - 3.0), 0.0, 1e-15);
}

TEST(LuSolve, IdentityReturnsRhs) {
  Rng rng(1);
  const ComplexMatrix m = oracle::random_matrix(rng, 3, 4);
  EXPECT_EQ(lu_solve(identity(3), m), m);
}

TEST(LuSolve, UpperTriangularByHand) {
  const ComplexMatrix x = lu_solve(from_real({{1, 1}, {0, 2}}), col({3, 4}));
  EXPECT_NEAR(std::abs(x(0, 0) - 1.0), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(x(1, 0) - 2.0), 0.0, 1e-15);
}

TEST(LuSolve, NeedsPivoting) {
  const ComplexMatrix x = lu_solve(from_real({{0, 1}, {1, 0}}), col({5, 7}));
  EXPECT_NEAR(std::abs(x(0, 0) - 7.0), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(x(1, 0) - 5.0), 0.0, 1e-15);
}

TEST(LuSolve, SingularThrowsWithPivotIndex) {
  try {
    lu_solve(from_real({{1, 2}, {2, 4}}), col({1, 1}));
    FAIL() << "expected SingularMatrix";
  } catch (const SingularMatrix& e) {
    EXPECT_EQ(e.pivot_index(), 1);
  }
  EXPECT_THROW(lu_solve(ComplexMatrix::Zero(3, 3), ComplexMatrix::Ones(3, 1)), SingularMatrix);
}

TEST(LuSolve, ShapeErrors) {
  EXPECT_THROW(lu_solve(ComplexMatrix::Identity(2, 3), col({1, 1})), DimensionMismatch);
  EXPECT_THROW(lu_solve(identity(2), col({1, 1, 1})), DimensionMismatch);
}

TEST(LuSolve, RandomBackwardErrorAndOracle) {
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    Rng rng(seed);
    const Index n = 1 + static_cast<Index>(seed % 16);
    const ComplexMatrix a = random_similarity(n, 100.0, rng).p;
    const ComplexMatrix b = oracle::random_matrix(rng, n, 3);
    const ComplexMatrix x = lu_solve(a, b);
    EXPECT_LE((a * x - b).norm(), 1e-10 * b.norm()) << "seed " << seed;
    EXPECT_LE(relative_error(x, oracle::solve(a, b)), 1e-12) << "seed " << seed;
  }
}

TEST(LuFactor, ReconstructsInputAndPermutationIsValid) {
  Rng rng(3);
  const ComplexMatrix a = oracle::random_matrix(rng, 7, 7);
  const LUFactorization f = lu_factor(a);
  ComplexMatrix l = f.lu.triangularView<Eigen::UnitLower>();
  ComplexMatrix u = f.lu.triangularView<Eigen::Upper>();
  ComplexMatrix pa(7, 7);
  std::vector<int> seen(7, 0);
  for (Index i = 0; i < 7; ++i) {
    pa.row(i) = a.row(f.perm[i]);
    ++seen[f.perm[i]];
  }
  for (int c : seen) EXPECT_EQ(c, 1);
  EXPECT_LE((l * u - pa).norm(), 1e-13 * a.norm());
  EXPECT_GE(f.growth, 0.0);
}

TEST(RightSolve, MatchesOracle) {
  Rng rng(4);
  const ComplexMatrix a = random_similarity(6, 10.0, rng).p;
  const ComplexMatrix b = oracle::random_matrix(rng, 2, 6);
  const ComplexMatrix x = right_solve(a, b);
  EXPECT_LE((x * a - b).norm(), 1e-12 * b.norm());
  EXPECT_LE(relative_error(x, oracle::solve_right(a, b)), 1e-12);
}

TEST(NullSpace, FullRankIsEmpty) {
  EXPECT_EQ(null_space_basis(identity(2)).dim(), 0);
}

TEST(NullSpace, ZeroRow) {
  const SubspaceBasis u = null_space_basis(from_real({{1, 0}, {0, 0}}));
  ASSERT_EQ(u.dim(), 1);
  EXPECT_NEAR(std::abs(u.basis()(1, 0)), 1.0, 1e-14);
  EXPECT_NEAR(std::abs(u.basis()(0, 0)), 0.0, 1e-14);
}

TEST(NullSpace, RankOneByHand) {
  const SubspaceBasis u = null_space_basis(from_real({{1, 1}, {1, 1}}));
  ASSERT_EQ(u.dim(), 1);
  const SubspaceBasis expected(col({M_SQRT1_2, -M_SQRT1_2}));
  EXPECT_LE(subspace_distance(u, expected), 1e-14);
}

TEST(NullSpace, ZeroMatrixIsWholeSpace) {
  EXPECT_EQ(null_space_basis(ComplexMatrix::Zero(3, 3)).dim(), 3);
}

TEST(NullSpace, RejectsNonPositiveTolerance) {
  EXPECT_THROW(null_space_basis(identity(2), 0.0), InvalidArgument);
}

TEST(NullSpace, RecoversConstructedNullSpace) {
  for (std::uint64_t seed = 0; seed < 12; ++seed) {
    Rng rng(100 + seed);
    const Index n = 3 + static_cast<Index>(seed % 6);
    const Index m = static_cast<Index>(seed % 3);
    // A = M·(I − P_N) kills exactly the span N of m random vectors.
    const SubspaceBasis truth = SubspaceBasis::span_of(oracle::random_matrix(rng, n, m));
    const ComplexMatrix a = random_similarity(n, 10.0, rng).p *
                            (ComplexMatrix::Identity(n, n) - truth.projector());
    const SubspaceBasis found = null_space_basis(a);
    ASSERT_EQ(found.dim(), m) << "seed " << seed;
    EXPECT_LE(subspace_distance(found, truth), 1e-8);
  }
}

TEST(SubspaceDistance, Examples) {
  const SubspaceBasis e1(col({1, 0}));
  const SubspaceBasis e2(col({0, 1}));
  const SubspaceBasis diag(col({M_SQRT1_2, M_SQRT1_2}));
  EXPECT_NEAR(subspace_distance(e1, e1), 0.0, 1e-15);
  EXPECT_NEAR(subspace_distance(e1, e2), 1.0, 1e-15);
  EXPECT_NEAR(subspace_distance(e1, diag), 0.70710678, 1e-8);
}

TEST(SubspaceDistance, DimensionConventions) {
  const SubspaceBasis e1(col({1, 0}));
  EXPECT_EQ(subspace_distance(e1, SubspaceBasis::whole_space(2)), 1.0);
  EXPECT_THROW(subspace_distance(e1, SubspaceBasis(col({1, 0, 0}))), DimensionMismatch);
  EXPECT_EQ(subspace_distance(SubspaceBasis(ComplexMatrix(2, 0)),
                              SubspaceBasis(ComplexMatrix(2, 0))),
            0.0);
}

TEST(SubspaceDistance, RandomPropertiesAgainstPrincipalAngles) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    Rng rng(200 + seed);
    const Index n = 2 + static_cast<Index>(seed % 7);
    const Index m = 1 + static_cast<Index>(seed % static_cast<std::uint64_t>(n));
    const SubspaceBasis u = SubspaceBasis::span_of(oracle::random_matrix(rng, n, m));
    const SubspaceBasis v = SubspaceBasis::span_of(oracle::random_matrix(rng, n, m));
    const double d = subspace_distance(u, v);
    EXPECT_GE(d, 0.0);
    EXPECT_LE(d, 1.0);
    EXPECT_NEAR(d, subspace_distance(v, u), 1e-14);
    EXPECT_NEAR(d, oracle::principal_angle_distance(u.basis(), v.basis()), 1e-10);
    // Same span, different basis.
    const ComplexMatrix rotated = u.basis() * random_similarity(m, 1.0, rng).p;
    EXPECT_LE(subspace_distance(u, SubspaceBasis::span_of(rotated)), 1e-12);
  }
}

TEST(SubspaceBasis, RejectsNonOrthonormal) {
  EXPECT_THROW(SubspaceBasis(col({1, 1})), InvalidArgument);
  EXPECT_THROW(SubspaceBasis(ComplexMatrix::Identity(2, 3)), DimensionMismatch);
}

TEST(InducedNorm2, Examples) {
  EXPECT_NEAR(induced_norm2(identity(3)), 1.0, 1e-15);
  EXPECT_NEAR(induced_norm2(from_real({{3, 0}, {0, -4}})), 4.0, 1e-14);
  EXPECT_NEAR(induced_norm2(from_real({{0, 2}, {0, 0}})), 2.0, 1e-14);
}

TEST(MatrixPowerSum, Examples) {
  EXPECT_NEAR(std::abs(matrix_power_sum(from_real({{0.5}}), 3)(0, 0) - 1.75), 0.0, 1e-15);
  Rng rng(5);
  EXPECT_EQ(matrix_power_sum(oracle::random_matrix(rng, 3, 3), 1), identity(3));
  EXPECT_EQ(matrix_power_sum(identity(2), 4), 4.0 * identity(2));
  EXPECT_THROW(matrix_power_sum(identity(2), 0), InvalidArgument);
}

TEST(MatrixPowerSum, TelescopesForContractions) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(300 + seed);
    const Index n = 1 + static_cast<Index>(seed % 6);
    ComplexMatrix a = oracle::random_matrix(rng, n, n);
    a *= 0.9 / induced_norm2(a);
    for (int k = 1; k <= 20; ++k) {
      const ComplexMatrix id = identity(n);
      const ComplexMatrix lhs = matrix_power_sum(a, k) * (id - a);
      EXPECT_LE((lhs - (id - matrix_power(a, k))).norm(), 1e-10);
    }
  }
}

TEST(MatrixPower, SmallCases) {
  const ComplexMatrix a = from_real({{1, 1}, {0, 1}});
  EXPECT_EQ(matrix_power(a, 0), identity(2));
  EXPECT_EQ(matrix_power(a, 5), from_real({{1, 5}, {0, 1}}));
}

TEST(RelativeError, AbsoluteWhenReferenceIsZero) {
  EXPECT_DOUBLE_EQ(relative_error(from_real({{3, 4}}), ComplexMatrix::Zero(1, 2)), 5.0);
  EXPECT_DOUBLE_EQ(relative_error(from_real({{2}}), from_real({{1}})), 1.0);
}
