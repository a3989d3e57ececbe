#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "oracles.hpp"

using namespace abflow;

namespace {

const Pencil kHalf(from_real({{0.5}}), from_real({{1.0}}));

long ipow(long base, int e) {
  long out = 1;
  for (int i = 0; i < e; ++i) out *= base;
  return out;
}

}  // namespace

TEST(AccelConfig, ValidatesOrder) {
  AccelConfig cfg;
  cfg.order = 1;
  EXPECT_THROW(cfg.validate(), InvalidArgument);
  cfg.order = 17;
  EXPECT_THROW(cfg.validate(), InvalidArgument);
  cfg.order = 16;
  EXPECT_NO_THROW(cfg.validate());
  EXPECT_THROW(modified_ab_run(kHalf, [] {
    AccelConfig c;
    c.order = 0;
    return c;
  }()), InvalidArgument);
}

TEST(InnerChain, OrderTwoIsIdentity) {
  const Pencil p = oracle::random_pencil(1, 3, 1);
  const auto [a, b] = inner_chain(p.a, p.b, 2);
  EXPECT_EQ(a, p.a);
  EXPECT_EQ(b, p.b);
}

TEST(InnerChain, ScalarOrderThree) {
  const auto [a, b] = inner_chain(kHalf.a, kHalf.b, 3);
  EXPECT_NEAR(a(0, 0).real(), 1.0 / 6.0, 1e-15);
  EXPECT_NEAR(b(0, 0).real(), 2.0 / 3.0, 1e-15);
}

TEST(InnerChain, DiagonalRatiosArePowers) {
  const std::vector<Complex> d = {0.5, Complex(0.1, 0.6), 2.0};
  const ComplexMatrix a = diagonal({d[0], d[1], d[2]});
  for (int r = 2; r <= 6; ++r) {
    const ABIterate out = inner_chain(ABIterate{a, identity(3), 1}, r);
    EXPECT_EQ(out.k, r - 1);
    for (Index j = 0; j < 3; ++j) {
      const Complex expected = std::pow(d[j], r - 1);
      EXPECT_NEAR(std::abs(out.a(j, j) / out.b(j, j) - expected), 0.0, 1e-13);
    }
  }
}

TEST(InnerChain, BreakdownCarriesInnerIndex) {
  // Eigenvalue e^{2πi/3}: A_1 + B_2 is singular, hit at ℓ = 2 of r = 4.
  const Pencil p(diagonal({std::polar(1.0, 2.0 * std::numbers::pi / 3.0), Complex(0.5)}), identity(2));
  try {
    inner_chain(ABIterate::first(p), 4);
    FAIL() << "expected breakdown";
  } catch (const Breakdown& e) {
    EXPECT_EQ(e.inner(), 2);
    EXPECT_EQ(e.index(), 3);
  }
}

TEST(ModifiedAbIterates, MatchPlainChainAtPowers) {
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    const Index n = 1 + static_cast<Index>(seed % 6);
    const Pencil p = oracle::random_pencil(500 + seed, n, (n + 1) / 2);
    const auto plain = ab_chain(p, 27);
    for (int r : {2, 3, 4}) {
      int count = 1;
      while (ipow(r, count) <= 27) ++count;
      const auto outer = modified_ab_iterates(p, r, count);
      for (int k = 1; k <= count; ++k) {
        const long idx = ipow(r, k - 1);
        ASSERT_EQ(outer[k - 1].k, idx);
        EXPECT_LE(relative_error(outer[k - 1].a, plain[idx - 1].a), 1e-8)
            << "seed " << seed << " r " << r << " k " << k;
        EXPECT_LE(relative_error(outer[k - 1].b, plain[idx - 1].b), 1e-8);
      }
    }
  }
}

TEST(ModifiedAbIterates, DifferenceInvariant) {
  const Pencil p = oracle::random_pencil(42, 6, 3);
  const double scale = p.a.norm() + p.b.norm();
  for (int r : {2, 3, 4, 5}) {
    for (const ABIterate& it : modified_ab_iterates(p, r, 4)) {
      EXPECT_LE(((it.a - it.b) - (p.a - p.b)).norm(), 1e-10 * scale);
      const ABIterate inner = inner_chain(it, r);
      EXPECT_LE(((inner.a - inner.b) - (p.a - p.b)).norm(), 1e-10 * scale);
    }
  }
}

TEST(ModifiedAbRun, MatchesPlainRunInFewerSteps) {
  const Pencil p(from_real({{0.5, 0}, {0, 2}}), identity(2));
  const SubspaceResult plain = ab_run(p, 1e-12, 100);
  AccelConfig cfg;
  cfg.order = 2;
  const SubspaceResult fast = modified_ab_run(p, cfg);
  ASSERT_EQ(fast.status, Status::kConverged);
  EXPECT_LE(subspace_distance(fast.u, plain.u), 1e-12);
  EXPECT_NEAR(std::abs(fast.lambda(0, 0) - 0.5), 0.0, 1e-12);
  // Plain stops at N once iterates N−1 and N agree; the accelerated run
  // needs outer iterates with indices 2^{k−2} ≥ N−1 and 2^{k−1}.
  const int bound = static_cast<int>(std::ceil(std::log2(plain.iterations - 1))) + 2;
  EXPECT_LE(fast.iterations, bound);
}

TEST(ModifiedAbRun, ZeroPencilConvergesAtFirstOuterStep) {
  for (int r = 2; r <= 5; ++r) {
    AccelConfig cfg;
    cfg.order = r;
    const SubspaceResult res = modified_ab_run(Pencil(ComplexMatrix::Zero(2, 2), identity(2)), cfg);
    EXPECT_EQ(res.status, Status::kConverged);
    EXPECT_EQ(res.iterations, 2);
  }
}

TEST(ModifiedAbRun, ScalarOrderThree) {
  const auto outer = modified_ab_iterates(kHalf, 3, 2);
  EXPECT_NEAR((outer[1].a(0, 0) / outer[1].b(0, 0)).real(), 0.125, 1e-15);
  EXPECT_EQ(outer[1].k, 3);
}

TEST(ModifiedAbRun, RecoversGeneratedSubspace) {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    ProblemSpec spec;
    spec.spectrum = {{0.3}, {Complex(0.2, 0.6)}, {1.5}, {-2.0}};
    spec.seed = 700 + seed;
    spec.random_b = true;
    const PencilProblem prob = make_pencil_problem(spec);
    for (int r : {2, 3, 4}) {
      AccelConfig cfg;
      cfg.order = r;
      const SubspaceResult res = modified_ab_run(prob.pencil, cfg);
      ASSERT_EQ(res.status, Status::kConverged);
      EXPECT_LE(subspace_distance(res.u, prob.u_true), 1e-7);
      EXPECT_LT(res.lambda_radius, 1.0);
    }
  }
}

TEST(ModifiedAbRun, BreakdownReportsOuterAndInner) {
  // λ = e^{2πi/3} breaks the plain chain forming A_3; with r = 4 that is the
  // second inner step of outer step 2.
  const Pencil p(diagonal({std::polar(1.0, 2.0 * std::numbers::pi / 3.0), Complex(0.5)}), identity(2));
  AccelConfig cfg;
  cfg.order = 4;
  const SubspaceResult res = modified_ab_run(p, cfg);
  ASSERT_EQ(res.status, Status::kBreakdown);
  EXPECT_EQ(res.breakdown->outer(), 2);
  EXPECT_EQ(res.breakdown->inner(), 2);
}

TEST(ModifiedAbRun, ResidualDecayBound) {
  // ‖Â_k U‖ ≤ ‖(B_1 − A_1)U‖ ‖Λ‖^N / (1 − ‖Λ‖^N), N = r^{k−1}, with U the
  // stable basis expressed through Λ with ‖Λ‖ ≤ 0.8.
  ProblemSpec spec;
  spec.spectrum = {{0.8}, {Complex(0.0, 0.5)}, {1.7}, {2.5}};
  spec.identity_similarity = true;
  spec.random_b = true;
  spec.seed = 9;
  const PencilProblem prob = make_pencil_problem(spec);
  const ComplexMatrix& u = prob.u_true.basis();
  const double lnorm = induced_norm2(prob.lambda_true);
  ASSERT_LE(lnorm, 0.8 + 1e-12);
  const double c = induced_norm2((prob.pencil.b - prob.pencil.a) * u);
  for (int r : {2, 3}) {
    const auto outer = modified_ab_iterates(prob.pencil, r, 4);
    for (const ABIterate& it : outer) {
      const double ln = std::pow(lnorm, static_cast<double>(it.k));
      EXPECT_LE(induced_norm2(it.a * u), c * ln / (1.0 - ln) * (1.0 + 1e-10) + 1e-14);
    }
  }
}
