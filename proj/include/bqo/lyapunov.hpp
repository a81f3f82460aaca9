#pragma once

#include <functional>
#include <span>

#include <Eigen/Dense>

#include "bqo/linalg.hpp"

namespace bqo {

/// Which Lyapunov operator is meant.
///   kRight:  A X + X A^T + sum_k N_k X N_k^T + F = 0
///   kLeft:   A^T X + X A + sum_k N_k^T X N_k + F = 0
enum class Side { kRight, kLeft };

struct SolverOptions {
  double residual_tol = 1e-8;
  double rel_diff_tol = 1e-7;
  int max_iter = 50;
  int oracle_dim_cap = 64;

  /// Throws BqoError(kBadOption) on nonpositive tolerances, max_iter < 1 or
  /// an oracle cap above 64.
  void validate() const;
};

struct LyapunovSolution {
  Matrix X;
  double relative_residual = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Bartels-Stewart solver for the standard Lyapunov equation with a cached
/// real Schur form of A. Both sides share the decomposition, so one solver
/// serves the reachability and the observability equations of a system.
class LyapunovSolver {
 public:
  /// Throws kNotStable if some eigenvalue of A has a nonnegative real part.
  explicit LyapunovSolver(const Matrix& a);

  /// Solves A X + X A^T + F = 0 (kRight) or A^T X + X A + F = 0 (kLeft).
  /// The result is symmetrized. Throws kSingularDecomposition when a
  /// diagonal block pair of the Schur form is numerically singular.
  Matrix solve(const Matrix& f, Side side) const;

  const Matrix& a() const { return a_; }
  Eigen::Index dim() const { return a_.rows(); }

 private:
  Matrix a_;
  Matrix u_;
  Matrix t_right_;  // T, upper quasi-triangular
  Matrix t_left_;   // J T^T J, upper quasi-triangular
  double scale_;
};

/// A X + X A^T + F (kRight) or the left analogue, plus the bilinear sum.
Matrix apply_lyapunov_operator(const Matrix& a, std::span<const Matrix> ns,
                               const Matrix& x, Side side);

/// ||L_A(X) + Pi(X) + F||_2 / ||F||_2. When F = 0 the absolute norm is
/// returned.
double residual_norm(const Matrix& a, std::span<const Matrix> ns,
                     const Matrix& f, const Matrix& x, Side side);

LyapunovSolution solve_standard(const Matrix& a, const Matrix& f, Side side);

/// Called after every fixed-point sweep with the sweep index (1 = seed) and
/// the current iterate.
using IterateObserver = std::function<void(int, const Matrix&)>;

/// Fixed-point iteration X_l solves the standard equation with right-hand
/// side F + Pi(X_{l-1}); X_1 solves it with F alone. Stops once the relative
/// residual drops below residual_tol or the relative iterate change drops
/// below rel_diff_tol. `converged` reports the residual test only. Throws
/// NoConvergenceError when max_iter sweeps pass without either criterion.
LyapunovSolution solve_generalized_fixed_point(
    const LyapunovSolver& solver, std::span<const Matrix> ns, const Matrix& f,
    Side side, const SolverOptions& opts = {},
    const IterateObserver& observer = {});

LyapunovSolution solve_generalized_fixed_point(
    const Matrix& a, std::span<const Matrix> ns, const Matrix& f, Side side,
    const SolverOptions& opts = {});

/// Dense solve of the n^2 x n^2 vectorized operator. Only meant as an
/// independent reference for small problems.
LyapunovSolution solve_generalized_kron_oracle(
    const Matrix& a, std::span<const Matrix> ns, const Matrix& f, Side side,
    const SolverOptions& opts = {});

struct SpectralRadiusCertificate {
  double rho = 0.0;
  bool admissible = false;
};

/// rho(-(I (x) A + A (x) I)^{-1} sum_k N_k (x) N_k). admissible iff rho < 1.
SpectralRadiusCertificate spectral_radius_certificate(
    const Matrix& a, std::span<const Matrix> ns,
    const SolverOptions& opts = {});

/// Default clip tolerance for psd_factor: n * machine epsilon.
double default_clip_tol(Eigen::Index n);

struct PsdFactorOptions {
  /// Eigenvalues at or below clip_tol * lambda_max are dropped.
  double clip_tol = -1.0;  // < 0 selects default_clip_tol(n)
  /// Eigenvalues below -negative_tol * lambda_max raise kNotPsd. A negative
  /// value means "same as clip_tol".
  double negative_tol = -1.0;
};

/// Low-rank square-root factor L with L L^T ~= X from the symmetric
/// eigendecomposition. Columns are ordered by decreasing eigenvalue.
Matrix psd_factor(const Matrix& x, const PsdFactorOptions& opts);
Matrix psd_factor(const Matrix& x, double clip_tol);
Matrix psd_factor(const Matrix& x);

}  // namespace bqo
