#include "bqo/reduction.hpp"

#include <gtest/gtest.h>

#include <complex>

#include "bqo/error.hpp"
#include "bqo/simulation.hpp"
#include "test_support.hpp"

namespace bqo {
namespace {

using testing::norm2;
using testing::random_matrix;
using testing::scalar_system;

using Complex = std::complex<double>;

// C (sI - A)^{-1} B, invariant under state-space similarity.
Eigen::MatrixXcd transfer(const Matrix& a, const Matrix& b, const Matrix& c, Complex s) {
  const Eigen::MatrixXcd shifted =
      s * Eigen::MatrixXcd::Identity(a.rows(), a.cols()) - a.cast<Complex>();
  return c.cast<Complex>() * shifted.partialPivLu().solve(b.cast<Complex>());
}

// Diagonal linear system whose Gramians are both diag(sigma).
BqoSystem balanced_diagonal(const Vector& decay, const Vector& sigma) {
  const Eigen::Index n = decay.size();
  Matrix b = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) b(i, i) = std::sqrt(2 * decay(i) * sigma(i));
  return BqoSystem::build(Matrix((-decay).asDiagonal()), b, b.transpose(),
                          MatrixList(n, Matrix::Zero(n, n)), MatrixList(n, Matrix::Zero(n, n)));
}

TEST(BalancedTruncation, FullOrderOnBalancedSystem) {
  Vector decay(3), sigma(3);
  decay << 1, 2, 3;
  sigma << 3, 2, 1;
  const BqoSystem s = balanced_diagonal(decay, sigma);
  const GramianSet g = compute_gramians(s, GramianVariant::kStandard);
  EXPECT_LE((g.P - Matrix(sigma.asDiagonal())).norm(), 1e-12);
  const BalancingResult res = reduce_with(s, g, 3);
  EXPECT_LE((res.hsv - sigma).norm(), 1e-12);
  EXPECT_LE((res.W.transpose() * res.V - Matrix::Identity(3, 3)).norm(), 1e-12);
  for (Complex z : {Complex(0.0, 0.0), Complex(0.5, 2.0), Complex(0.0, 10.0)}) {
    EXPECT_LE((transfer(s.A(), s.B(), s.C(), z) -
               transfer(res.reduced.A(), res.reduced.B(), res.reduced.C(), z))
                  .norm(),
              1e-12);
  }
  EXPECT_TRUE(res.warnings.empty());
}

TEST(BalancedTruncation, TwoStateLinearAgainstHandBalancing) {
  Vector d(2);
  d << -1, -10;
  const Matrix a = d.asDiagonal();
  const Matrix b = Matrix::Ones(2, 1);
  const Matrix c = Matrix::Ones(1, 2);
  const BqoSystem s = BqoSystem::build(a, b, c, {Matrix::Zero(2, 2)}, {Matrix::Zero(2, 2)});
  // Closed-form Gramians of a diagonal system: P_ij = -b_i b_j / (a_i + a_j).
  Matrix p(2, 2), q(2, 2);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      p(i, j) = -b(i, 0) * b(j, 0) / (d(i) + d(j));
      q(i, j) = -c(0, i) * c(0, j) / (d(i) + d(j));
    }
  Eigen::EigenSolver<Matrix> es(p * q);
  Vector lam = es.eigenvalues().real();
  std::sort(lam.data(), lam.data() + 2, std::greater<>());
  const Vector hsv_ref = lam.cwiseSqrt();

  // Balancing transform T = P^{1/2} U S^{-1/2} from P^{1/2} Q P^{1/2} = U S^2 U^T.
  Eigen::SelfAdjointEigenSolver<Matrix> ep(p);
  const Matrix ph = ep.operatorSqrt();
  Eigen::SelfAdjointEigenSolver<Matrix> em(ph * q * ph);
  const Matrix u = em.eigenvectors().rowwise().reverse();
  const Vector sig = em.eigenvalues().reverse().cwiseSqrt();
  const Matrix t = ph * u * sig.cwiseSqrt().cwiseInverse().asDiagonal();
  const Matrix ti = t.inverse();
  const Matrix ar = (ti * a * t).topLeftCorner(1, 1);
  const Matrix br = (ti * b).topRows(1);
  const Matrix cr = (c * t).leftCols(1);

  const GramianSet g = compute_gramians(s, GramianVariant::kStandard);
  const BalancingResult res = reduce_with(s, g, 1);
  EXPECT_LE((res.hsv - hsv_ref).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_NEAR(res.reduced.A()(0, 0), ar(0, 0), 1e-12);
  EXPECT_NEAR(res.reduced.B()(0, 0) * res.reduced.C()(0, 0), br(0, 0) * cr(0, 0), 1e-12);
}

TEST(BalancedTruncation, BiorthogonalAndSymmetricOnRandomSystems) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const BqoSystem s = random_admissible(9, 2, 3, seed, 0.5);
    const GramianSet g = compute_gramians(s, GramianVariant::kStandard);
    for (int r : {1, 4, 9}) {
      const BalancingResult res = reduce_with(s, g, r);
      EXPECT_LE(norm2(res.W.transpose() * res.V - Matrix::Identity(r, r)), 1e-8);
      EXPECT_EQ(res.reduced.n(), r);
      EXPECT_EQ(res.reduced.m(), 2);
      EXPECT_EQ(res.reduced.p(), 3);
      for (const auto& mj : res.reduced.M()) EXPECT_EQ(mj, mj.transpose());
      for (Eigen::Index i = 1; i < res.hsv.size(); ++i)
        EXPECT_LE(res.hsv(i), res.hsv(i - 1));
      EXPECT_GE(res.hsv.minCoeff(), 0.0);
    }
  }
}

TEST(BalancedTruncation, RankDeficientReportsAchievableOrder) {
  const BqoSystem s = scalar_system();
  const GramianSet g = compute_gramians(s, GramianVariant::kStandard);
  Matrix u = gramian_factor(g.P);
  try {
    balanced_truncation(s, u, gramian_factor(g.Q), 2);
    FAIL();
  } catch (const RankDeficientError& e) {
    EXPECT_EQ(e.code(), ErrorCode::kRankDeficient);
    EXPECT_EQ(e.achievable_order(), 1);
  }
  EXPECT_THROW(balanced_truncation(s, Matrix::Ones(2, 1), Matrix::Ones(1, 1), 1),
               BqoError);
  EXPECT_THROW(balanced_truncation(s, u, u, 0), BqoError);
}

TEST(BalancedTruncation, TieWarning) {
  Vector decay(3), sigma(3);
  decay << 1, 2, 3;
  sigma << 1, 0.5, 0.5;
  const BqoSystem s = balanced_diagonal(decay, sigma);
  const GramianSet g = compute_gramians(s, GramianVariant::kStandard);
  EXPECT_FALSE(reduce_with(s, g, 2).warnings.empty());
  EXPECT_TRUE(reduce_with(s, g, 1).warnings.empty());
}

TEST(BalancedTruncation, ScalarSystemIsInputOutputEquivalent) {
  const BqoSystem s = scalar_system();
  const BalancingResult res =
      reduce_with(s, compute_gramians(s, GramianVariant::kStandard), 1);
  const Trajectory full = simulate(s, cos_input(1), 3.0, 300);
  const Trajectory red = simulate(res.reduced, cos_input(1), 3.0, 300);
  EXPECT_LE(error_metrics(full, red).frobenius_rel, 1e-12);
}

TEST(BalancedTruncation, ScalingIsCarriedToReducedModel) {
  const BqoSystem s = scale_input(random_admissible(6, 2, 1, 4, 0.5), 0.3);
  const BalancingResult res =
      reduce_with(s, compute_gramians(s, GramianVariant::kStandard), 3);
  EXPECT_EQ(res.reduced.input_scale(), 0.3);
  EXPECT_LE((res.reduced.N()[0] - res.W.transpose() * s.N()[0] * res.V).norm(),
            1e-12 * s.N()[0].norm());
  EXPECT_LE((res.reduced.B() - res.W.transpose() * s.B()).norm(), 1e-12 * s.B().norm());
}

TEST(ReduceWith, TruncatedAlternativeEqualsPadhiStepOne) {
  const BqoSystem s = random_admissible(8, 2, 2, 7, 0.5);
  const GramianSet tp = compute_gramians(s, GramianVariant::kTruncatedPadhi);
  const GramianSet ta = compute_gramians(s, GramianVariant::kTruncatedAlternative);
  GramianSet step1 = tp;
  step1.Q = tp.intermediates.at("Qhat");
  const BalancingResult a = reduce_with(s, ta, 4);
  const BalancingResult b = reduce_with(s, step1, 4);
  EXPECT_EQ(a.hsv, b.hsv);
  EXPECT_EQ(a.reduced.A(), b.reduced.A());
}

TEST(HsvCompare, Examples) {
  const BqoSystem s = scalar_system();
  const Matrix u = Matrix::Constant(1, 1, std::sqrt(4.0 / 7.0));
  const auto cmp = hsv_compare(u, Matrix::Constant(1, 1, std::sqrt(11.0 / 14.0)),
                               Matrix::Constant(1, 1, std::sqrt(44.0 / 49.0)));
  EXPECT_TRUE(cmp.dominated);
  EXPECT_LT(cmp.hsv_a(0), cmp.hsv_b(0));
  const Matrix l = random_matrix(5, 3, 1);
  const auto same = hsv_compare(random_matrix(5, 4, 2), l, l);
  EXPECT_TRUE(same.dominated);
  EXPECT_EQ(same.hsv_a, same.hsv_b);
  EXPECT_THROW(hsv_compare(u, random_matrix(2, 1, 3), u), BqoError);
}

TEST(HsvCompare, AlternativeDominatedByStandard) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const BqoSystem s = random_admissible(8, 2, 2, seed, 0.5);
    const GramianSet gs = compute_gramians(s, GramianVariant::kStandard);
    const GramianSet ga = compute_gramians(s, GramianVariant::kAlternative);
    EXPECT_TRUE(hsv_compare(gramian_factor(gs.P), gramian_factor(ga.Q),
                            gramian_factor(gs.Q))
                    .dominated);
  }
}

TEST(Permutation, InputRelabelingKeepsHsv) {
  const BqoSystem s = random_admissible(7, 3, 2, 21, 0.5);
  const std::vector<int> perm{2, 0, 1};
  Matrix b(s.n(), 3);
  MatrixList ns;
  for (int k = 0; k < 3; ++k) {
    b.col(k) = s.B().col(perm[k]);
    ns.push_back(s.N()[perm[k]]);
  }
  const BqoSystem t = BqoSystem::build(s.A(), b, s.C(), ns, s.M());
  const Vector hs = reduce_with(s, compute_gramians(s, GramianVariant::kStandard), 3).hsv;
  const Vector ht = reduce_with(t, compute_gramians(t, GramianVariant::kStandard), 3).hsv;
  EXPECT_LE((hs - ht).cwiseAbs().maxCoeff(), 1e-12 * hs(0));
}

}  // namespace
}  // namespace bqo
