#pragma once

#include <vector>

#include "bqo/linalg.hpp"

namespace bqo {

/// A bilinear system with quadratic output
///
///   x' = A x + sum_k N_k x u_k + B u,   x(0) = 0
///   y_j = (C x)_j + x^T M_j x,          j = 1..p
///
/// The object is immutable. An input scaling u -> u / gamma can be attached
/// with scale_input(); the accessors B() and N() then return the scaled
/// realization gamma * B, gamma * N_k, while the physical matrices remain
/// available through unscaled_B() / unscaled_N(). Scaled matrices are always
/// formed as (accumulated gamma) * (physical matrix), so repeated scaling is
/// bit-for-bit identical to a single scaling by the product.
class BqoSystem {
 public:
  /// Validates shapes and finiteness; each M_j is replaced by (M_j + M_j^T)/2.
  /// Throws kShapeMismatch (naming the offending matrix) or kNonFinite.
  static BqoSystem build(Matrix a, Matrix b, Matrix c, MatrixList ns,
                         MatrixList ms);

  Eigen::Index n() const { return a_.rows(); }
  Eigen::Index m() const { return b_.cols(); }
  Eigen::Index p() const { return c_.rows(); }

  const Matrix& A() const { return a_; }
  const Matrix& B() const { return b_scaled_; }
  const Matrix& C() const { return c_; }
  const MatrixList& N() const { return n_scaled_; }
  const MatrixList& M() const { return ms_; }

  double input_scale() const { return input_scale_; }
  const Matrix& unscaled_B() const { return b_; }
  const MatrixList& unscaled_N() const { return ns_; }

  /// Same physical system with the input scaling removed.
  BqoSystem unscaled() const;

  /// [N_1 ... N_m] of the scaled realization (n x nm).
  Matrix stacked_N() const;
  /// [N_1^T ... N_m^T] of the scaled realization (n x nm).
  Matrix stacked_NT() const;
  /// [M_1 ... M_p] (n x np).
  Matrix stacked_M() const;

  friend BqoSystem scale_input(const BqoSystem& sys, double gamma);

 private:
  BqoSystem(Matrix a, Matrix b, Matrix c, MatrixList ns, MatrixList ms,
            double input_scale);

  Matrix a_, b_, c_;
  MatrixList ns_, ms_;
  double input_scale_ = 1.0;
  Matrix b_scaled_;
  MatrixList n_scaled_;
};

/// Input scaling u -> u / gamma: N_k -> gamma N_k, B -> gamma B; C and M_j
/// unchanged. Throws kBadGamma unless 0 < gamma <= 1.
BqoSystem scale_input(const BqoSystem& sys, double gamma);

/// Bounds ||e^{At}|| <= beta e^{-alpha t}.
struct StabilityParams {
  double alpha = 0.0;
  double beta = 1.0;
  /// True when the eigenvector route was accepted without the fallback.
  bool from_eigenvectors = true;
  int fallback_rounds = 0;
};

/// Eigendecomposition route (alpha = -max Re lambda, beta = cond_2(V)) checked
/// by sampling ||e^{At}|| e^{alpha t} on a log grid over [1e-3/alpha,
/// 20/alpha]. Defective or badly conditioned eigenvector bases fall back to a
/// sampled supremum with alpha shrunk by 0.9 per round (at most 10 rounds).
/// Throws kNotStable, or kVerificationFailed when the fallback is exhausted.
StabilityParams stability_params(const Matrix& a);

/// True when ||e^{At}|| e^{alpha t} <= beta (1 + 1e-8) on the sample grid.
bool verify_stability_bound(const Matrix& a, double alpha, double beta);

struct StabilityCertificate {
  double alpha = 0.0;
  double beta = 1.0;
  double gamma_P = 0.0;
  double gamma_QS = 0.0;
  double gamma_QA = 0.0;
  double threshold = 0.0;  // 2 alpha / beta^2
  bool exists_P = false;
  bool exists_QS = false;
  bool exists_QA = false;
  /// sum_k ||N_k||^2 and sum_j ||M_j||^2, the looser norm-sum variants.
  double loose_sum_N = 0.0;
  double loose_sum_M = 0.0;
};

/// Existence margins from exact spectral norms of the stacked matrices:
///   Gamma_P  = ||[N_1 .. N_m]||^2
///   Gamma_QS = max(Gamma_P, ||[N_1^T .. N_m^T]||^2, ||[M_1 .. M_p]||^2)
///   Gamma_QA = max(Gamma_P, ||[M_1 .. M_p]||^2)
/// compared against 2 alpha / beta^2.
StabilityCertificate existence_margins(const BqoSystem& sys);

/// Same margins with precomputed stability parameters.
StabilityCertificate existence_margins(const BqoSystem& sys,
                                       const StabilityParams& params);

}  // namespace bqo
