#pragma once

#include <string>
#include <vector>

#include "bqo/gramians.hpp"
#include "bqo/linalg.hpp"
#include "bqo/system.hpp"

namespace bqo {

struct BalancingOptions {
  /// Singular values above rank_tol * sigma_1 count towards the numerical
  /// rank of U^T L.
  double rank_tol = 1e-12;
  /// sigma_r and sigma_{r+1} closer than tie_tol * sigma_1 produce a warning.
  double tie_tol = 1e-10;
};

struct BalancingResult {
  Vector hsv;  // all singular values of U^T L, nonincreasing
  Matrix W;    // n x r
  Matrix V;    // n x r
  BqoSystem reduced;
  int numerical_rank = 0;
  std::vector<std::string> warnings;
};

/// Square-root balanced truncation with factors P = U U^T, Q = L L^T:
///   U^T L = Z S Y^T,  W^T = S_1^{-1/2} Y_1^T L^T,  V = U Z_1 S_1^{-1/2}
/// and the reduced matrices W^T A V, W^T B, C V, W^T N_k V, V^T M_j V.
/// Singular vector signs are fixed so the largest-magnitude entry of each
/// column of Z is positive.
///
/// The projection is applied to the physical matrices of `sys`; the reduced
/// system carries the same input scaling.
///
/// Throws RankDeficientError when r exceeds the numerical rank and
/// kShapeMismatch on inconsistent factors or r < 1.
BalancingResult balanced_truncation(const BqoSystem& sys, const Matrix& u,
                                    const Matrix& l, int r,
                                    const BalancingOptions& opts = {});

/// Singular values of U^T L, nonincreasing.
Vector hankel_singular_values(const Matrix& u, const Matrix& l);

struct HsvComparison {
  Vector hsv_a;
  Vector hsv_b;
  bool dominated = false;
};

/// dominated iff hsv_a[i] <= hsv_b[i] + 1e-10 hsv_b[0] for every i, with the
/// shorter list padded by zeros.
HsvComparison hsv_compare(const Matrix& u, const Matrix& l_a,
                          const Matrix& l_b);

/// Factor both Gramians of `gramians` and run balanced_truncation. The
/// factorization tolerates eigenvalues down to -1e-10 lambda_max (roundoff of
/// the Gramian solvers) and clips at n * eps.
BalancingResult reduce_with(const BqoSystem& sys, const GramianSet& gramians,
                            int r, const BalancingOptions& opts = {});

/// Factors used by reduce_with.
Matrix gramian_factor(const Matrix& gramian);

}  // namespace bqo
