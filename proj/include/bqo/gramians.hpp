#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "bqo/linalg.hpp"
#include "bqo/lyapunov.hpp"
#include "bqo/system.hpp"

namespace bqo {

enum class GramianVariant {
  kStandard,              // (P, Q^S)
  kPadhi,                 // (P, Q^P) as a truncated series partial sum
  kAlternative,           // (P, Q^A)
  kMixed,                 // (P, Q^M(phi))
  kTruncatedStandard,     // (P_T, Q^S_T)
  kTruncatedPadhi,        // (P_T, Q^P_T)
  kTruncatedAlternative,  // (P_T, Q^A_T)
  kReach,                 // P only
  kTruncatedReach,        // P_T only
};

std::string_view to_string(GramianVariant v);
/// Accepts the CLI tags S, P, A, M, TS, TP, TA, reach, Treach.
std::optional<GramianVariant> parse_gramian_variant(std::string_view tag);

struct GramianSet {
  Matrix P;
  Matrix Q;  // empty for the reach-only variants
  GramianVariant variant = GramianVariant::kStandard;
  /// Relative residual of every Lyapunov equation solved on the way, keyed by
  /// the name of the matrix it produced (P, P1, PT, Q, Q1, Qhat, ...).
  std::map<std::string, double> residuals;
  /// Fixed-point sweeps per generalized equation (P, Q); 1 for standard ones.
  std::map<std::string, int> iterations;
  std::vector<double> phi;
  /// Intermediate matrices of the truncated algorithms (P1, Qhat, ...).
  std::map<std::string, Matrix> intermediates;
  std::vector<std::string> warnings;
};

/// Solves A P + P A^T + sum_k N_k P N_k^T + B B^T = 0 by fixed-point
/// iteration.
LyapunovSolution reach_gramian(const BqoSystem& sys,
                               const SolverOptions& opts = {});

/// A^T Q + Q A + sum_k N_k^T Q N_k + sum_j M_j P M_j + C^T C = 0.
LyapunovSolution obs_gramian_standard(const BqoSystem& sys, const Matrix& p,
                                      const SolverOptions& opts = {});

/// A^T Q + Q A + sum_j M_j P M_j + C^T C = 0 (one standard solve).
LyapunovSolution obs_gramian_alternative(const BqoSystem& sys,
                                         const Matrix& p);

/// A^T Q + Q A + sum_k phi_k^2 N_k^T Q N_k + sum_j M_j P M_j + C^T C = 0.
/// phi has one entry per input, each in [0, 1].
LyapunovSolution obs_gramian_mixed(const BqoSystem& sys, const Matrix& p,
                                   const std::vector<double>& phi,
                                   const SolverOptions& opts = {});

/// Terms of the Volterra-series expansions, each from one standard solve.
struct SeriesTerms {
  MatrixList P_terms;   // P_1 .. P_depth
  MatrixList QS_terms;  // Q^S_1 .. Q^S_depth
  MatrixList QB_terms;  // Q^B_1 .. Q^B_depth
  /// Q_{i,j} for i + j <= depth + 1, stored as cross_terms[i-1][j-1].
  std::vector<MatrixList> cross_terms;
  int depth = 0;

  /// sum_{i<=d} Q^B_i + sum_{i+j<=d+1} Q_{i,j}, the Q^P partial sum at depth d.
  Matrix padhi_partial_sum(int d) const;
  Matrix reach_partial_sum(int d) const;
  Matrix standard_partial_sum(int d) const;
};

/// Stops early (depth then reports the terms actually computed) once a new
/// P and Q^S term both fall below 1e-12 of their partial sums.
SeriesTerms series_terms(const BqoSystem& sys, int depth);

struct TruncatedReach {
  Matrix P1;
  Matrix PT;
  double residual_P1 = 0.0;
  double residual_PT = 0.0;
};

/// Two standard solves: P_1 with B B^T, then P_T with sum_k N_k P_1 N_k^T +
/// B B^T.
TruncatedReach truncated_reach(const BqoSystem& sys);

struct TruncatedObservability {
  Matrix Q;
  /// Intermediate solutions in solve order (Q^S_1, Qhat for Q^S_T; Qhat for
  /// Q^P_T; none for Q^A_T).
  MatrixList steps;
  std::vector<double> residuals;  // one per solve, last one belongs to Q
};

/// Three chained standard solves giving Q^S_1 + Q^S_2 + Q^S_3.
TruncatedObservability truncated_obs_standard(const BqoSystem& sys,
                                              const Matrix& p1,
                                              const Matrix& pt);

/// Two standard solves; the first intermediate coincides with Q^A_T.
TruncatedObservability truncated_obs_padhi(const BqoSystem& sys,
                                           const Matrix& pt);

/// One standard solve with P_T in place of P.
TruncatedObservability truncated_obs_alternative(const BqoSystem& sys,
                                                 const Matrix& pt);

struct GramianOptions {
  SolverOptions solver;
  std::vector<double> phi;  // kMixed only
  int series_depth = 8;     // kPadhi only
};

/// Computes the Gramian pair for `variant`. Warns (in GramianSet::warnings)
/// and proceeds when the existence margins are not met. Throws kNotPsd when a
/// Gramian has lambda_min < -1e-10 lambda_max.
GramianSet compute_gramians(const BqoSystem& sys, GramianVariant variant,
                            const GramianOptions& opts = {});

/// Orthonormal basis of eigenvectors with eigenvalue <= rel_tol * lambda_max.
Matrix numerical_kernel(const Matrix& gramian, double rel_tol = 1e-10);

}  // namespace bqo
