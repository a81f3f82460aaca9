#include "bqo/lyapunov.hpp"

#include <gtest/gtest.h>

#include "bqo/error.hpp"
#include "test_support.hpp"

namespace bqo {
namespace {

using testing::brute_force_generalized;
using testing::min_eig;
using testing::norm2;
using testing::random_matrix;
using testing::random_stable;
using testing::rel_err;

Matrix scalar(double v) { return Matrix::Constant(1, 1, v); }

TEST(SolveStandard, ScalarAndDiagonal) {
  EXPECT_NEAR(solve_standard(scalar(-1), scalar(2), Side::kRight).X(0, 0), 1.0,
              1e-15);
  const Matrix x = solve_standard(-Matrix::Identity(2, 2),
                                  Matrix::Identity(2, 2), Side::kRight)
                       .X;
  EXPECT_TRUE(x.isApprox(0.5 * Matrix::Identity(2, 2), 1e-15));
}

TEST(SolveStandard, MatchesVecOperatorBothSides) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const Matrix a = random_stable(8, seed, 0.5);
    const Matrix g = random_matrix(8, 3, seed + 100);
    const Matrix f = g * g.transpose();
    for (Side side : {Side::kRight, Side::kLeft}) {
      const auto sol = solve_standard(a, f, side);
      const Matrix ref = brute_force_generalized(a, {}, f, side == Side::kLeft);
      EXPECT_LE(rel_err(sol.X, ref), 1e-10);
      EXPECT_TRUE(sol.converged);
      EXPECT_LE(sol.relative_residual, 1e-12);
      EXPECT_EQ(sol.X, sol.X.transpose());
    }
  }
}

TEST(SolveStandard, ComplexEigenvaluesHandled) {
  Matrix a(4, 4);
  a << -1, 5, 0, 0,  //
      -5, -1, 0, 0,  //
      1, 2, -0.5, 3,  //
      0, 1, -3, -0.5;
  const Matrix f = Matrix::Identity(4, 4);
  for (Side side : {Side::kRight, Side::kLeft}) {
    const auto sol = solve_standard(a, f, side);
    EXPECT_LE(sol.relative_residual, 1e-13);
    EXPECT_LE(rel_err(sol.X, brute_force_generalized(a, {}, f, side == Side::kLeft)),
              1e-11);
  }
}

TEST(SolveStandard, UnstableRejected) {
  Matrix rot(2, 2);
  rot << 0, 1, -1, 0;
  try {
    solve_standard(rot, Matrix::Identity(2, 2), Side::kRight);
    FAIL();
  } catch (const BqoError& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNotStable);
  }
  EXPECT_THROW(LyapunovSolver(scalar(0.1)), BqoError);
}

TEST(FixedPoint, ScalarClosedForm) {
  const MatrixList ns{scalar(0.5)};
  const auto sol =
      solve_generalized_fixed_point(scalar(-1), ns, scalar(1), Side::kRight);
  EXPECT_NEAR(sol.X(0, 0), 4.0 / 7.0, 1e-8);
  EXPECT_TRUE(sol.converged);
  EXPECT_LE(sol.relative_residual, 1e-8);
  const auto tight = solve_generalized_fixed_point(scalar(-1), ns, scalar(1),
                                                   Side::kRight, testing::tight_solver());
  EXPECT_NEAR(tight.X(0, 0), 4.0 / 7.0, 1e-13);
}

TEST(FixedPoint, NoBilinearTermEqualsStandard) {
  const Matrix a = random_stable(6, 9);
  const Matrix g = random_matrix(6, 2, 10);
  const Matrix f = g * g.transpose();
  const MatrixList zeros(2, Matrix::Zero(6, 6));
  const auto fp = solve_generalized_fixed_point(a, zeros, f, Side::kLeft);
  EXPECT_EQ(fp.X, solve_standard(a, f, Side::kLeft).X);
  EXPECT_EQ(fp.iterations, 1);
}

class FixedPointOracle : public ::testing::TestWithParam<std::uint64_t> {};

TEST_P(FixedPointOracle, AgreesWithOracleAndIsMonotone) {
  const std::uint64_t seed = GetParam();
  const BqoSystem sys = random_admissible(10, 2, 2, seed, 0.5);
  const Matrix f = sys.B() * sys.B().transpose();
  for (Side side : {Side::kRight, Side::kLeft}) {
    const Matrix rhs = side == Side::kRight ? f : Matrix(sys.C().transpose() * sys.C());
    std::vector<Matrix> iterates;
    SolverOptions opts;
    opts.rel_diff_tol = 1e-14;
    const LyapunovSolver solver(sys.A());
    const auto fp = solve_generalized_fixed_point(
        solver, sys.N(), rhs, side, opts,
        [&](int, const Matrix& x) { iterates.push_back(x); });
    const auto oracle = solve_generalized_kron_oracle(sys.A(), sys.N(), rhs, side);
    const Matrix ref = brute_force_generalized(sys.A(), sys.N(), rhs,
                                               side == Side::kLeft);
    EXPECT_LE(rel_err(oracle.X, ref), 1e-10);
    EXPECT_LE(rel_err(fp.X, ref), 10 * opts.residual_tol);
    EXPECT_TRUE(fp.converged);
    EXPECT_LE(fp.iterations, 50);
    // converged <=> recomputed residual <= tol
    EXPECT_LE(residual_norm(sys.A(), sys.N(), rhs, fp.X, side), opts.residual_tol);
    ASSERT_EQ(static_cast<int>(iterates.size()), fp.iterations);
    for (std::size_t l = 1; l < iterates.size(); ++l) {
      EXPECT_GE(min_eig(iterates[l] - iterates[l - 1]),
                -1e-12 * norm2(iterates[l]));
    }
    EXPECT_EQ(fp.X, fp.X.transpose());
    EXPECT_EQ(oracle.X, oracle.X.transpose());
  }
}

INSTANTIATE_TEST_SUITE_P(Seeds, FixedPointOracle,
                         ::testing::Values(0u, 1u, 2u, 3u, 4u, 5u));

TEST(FixedPoint, DivergentIterationThrows) {
  const MatrixList ns{scalar(1.5)};
  SolverOptions opts;
  opts.max_iter = 20;
  try {
    solve_generalized_fixed_point(scalar(-1), ns, scalar(1), Side::kRight, opts);
    FAIL();
  } catch (const NoConvergenceError& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNoConvergence);
    EXPECT_EQ(e.iterations(), 20);
    EXPECT_GT(e.last_residual(), 1e-8);
  }
}

TEST(FixedPoint, StagnationStopsWithoutConvergedFlag) {
  const MatrixList ns{scalar(0.5)};
  SolverOptions opts;
  opts.residual_tol = 1e-300;
  opts.rel_diff_tol = 1e-6;
  const auto sol =
      solve_generalized_fixed_point(scalar(-1), ns, scalar(1), Side::kRight, opts);
  EXPECT_FALSE(sol.converged);
  EXPECT_NEAR(sol.X(0, 0), 4.0 / 7.0, 1e-5);
}

TEST(SolverOptions, Validation) {
  SolverOptions o;
  EXPECT_NO_THROW(o.validate());
  o.max_iter = 0;
  EXPECT_THROW(o.validate(), BqoError);
  o = {};
  o.residual_tol = 0;
  EXPECT_THROW(o.validate(), BqoError);
  o = {};
  o.oracle_dim_cap = 65;
  EXPECT_THROW(o.validate(), BqoError);
}

TEST(KronOracle, ClosedFormsAndErrors) {
  EXPECT_NEAR(solve_generalized_kron_oracle(scalar(-1), MatrixList{scalar(0.5)},
                                            scalar(1), Side::kRight)
                  .X(0, 0),
              4.0 / 7.0, 1e-14);
  EXPECT_TRUE(solve_generalized_kron_oracle(-Matrix::Identity(2, 2), {},
                                            Matrix::Identity(2, 2), Side::kRight)
                  .X.isApprox(0.5 * Matrix::Identity(2, 2), 1e-15));
  try {
    solve_generalized_kron_oracle(-Matrix::Identity(65, 65), {},
                                  Matrix::Identity(65, 65), Side::kRight);
    FAIL();
  } catch (const BqoError& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDimTooLarge);
  }
  // -2 x + 2 x = 0: singular generalized operator.
  try {
    solve_generalized_kron_oracle(scalar(-1), MatrixList{scalar(std::sqrt(2.0))},
                                  scalar(1), Side::kRight);
    FAIL();
  } catch (const BqoError& e) {
    EXPECT_EQ(e.code(), ErrorCode::kSingularOperator);
  }
}

TEST(SpectralRadius, ScalarValues) {
  EXPECT_EQ(spectral_radius_certificate(scalar(-1), MatrixList{}).rho, 0.0);
  const auto small = spectral_radius_certificate(scalar(-1), MatrixList{scalar(0.5)});
  EXPECT_NEAR(small.rho, 0.125, 1e-15);
  EXPECT_TRUE(small.admissible);
  const auto big = spectral_radius_certificate(scalar(-1), MatrixList{scalar(1.5)});
  EXPECT_NEAR(big.rho, 1.125, 1e-15);
  EXPECT_FALSE(big.admissible);
  EXPECT_TRUE(spectral_radius_certificate(random_stable(5, 3),
                                          MatrixList(2, Matrix::Zero(5, 5)))
                  .admissible);
}

TEST(ResidualNorm, Contract) {
  const MatrixList ns{scalar(0.5)};
  EXPECT_LE(residual_norm(scalar(-1), ns, scalar(1), scalar(4.0 / 7.0), Side::kRight),
            1e-14);
  EXPECT_DOUBLE_EQ(residual_norm(scalar(-1), ns, scalar(1), scalar(0), Side::kRight),
                   1.0);
  const Matrix a = random_stable(5, 4);
  const Matrix f = Matrix::Identity(5, 5);
  const MatrixList ns5{0.2 * random_matrix(5, 5, 8)};
  const Matrix x = solve_generalized_kron_oracle(a, ns5, f, Side::kRight).X;
  const double r6 = residual_norm(a, ns5, f, x + 1e-6 * Matrix::Identity(5, 5), Side::kRight);
  const double r3 = residual_norm(a, ns5, f, x + 1e-3 * Matrix::Identity(5, 5), Side::kRight);
  EXPECT_NEAR(r3 / r6, 1e3, 1e-3 * 1e3);
  EXPECT_THROW(residual_norm(a, ns5, Matrix::Identity(4, 4), x, Side::kRight),
               BqoError);
}

TEST(PsdFactor, Examples) {
  const Matrix l = psd_factor(Matrix::Identity(3, 3));
  EXPECT_EQ(l.cols(), 3);
  EXPECT_TRUE((l * l.transpose()).isApprox(Matrix::Identity(3, 3), 1e-15));
  Vector d(3);
  d << 4, 1, 0;
  const Matrix x = d.asDiagonal();
  const Matrix l2 = psd_factor(x);
  EXPECT_EQ(l2.cols(), 2);
  EXPECT_LE((l2 * l2.transpose() - x).norm(), 1e-15);
  Vector bad(2);
  bad << 1, -0.1;
  try {
    psd_factor(Matrix(bad.asDiagonal()));
    FAIL();
  } catch (const BqoError& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNotPsd);
  }
}

TEST(PsdFactor, HeatReachabilityGramian) {
  const BqoSystem sys = heat_system({10, HeatOutput::kOnesQuadratic, 0.1});
  const Matrix p =
      solve_generalized_fixed_point(sys.A(), sys.N(), sys.B() * sys.B().transpose(),
                                    Side::kRight)
          .X;
  const Matrix l = psd_factor(p, PsdFactorOptions{-1.0, 1e-10});
  EXPECT_LE(norm2(p - l * l.transpose()), 1e-10 * norm2(p));
}

}  // namespace
}  // namespace bqo
