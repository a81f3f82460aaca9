#include "bqo/lyapunov.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include <Eigen/Eigenvalues>

#include "bqo/error.hpp"

namespace bqo {
namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

struct Block {
  Eigen::Index start;
  Eigen::Index size;
};

std::vector<Block> diagonal_blocks(const Matrix& t) {
  std::vector<Block> blocks;
  const Eigen::Index n = t.rows();
  for (Eigen::Index i = 0; i < n;) {
    if (i + 1 < n && t(i + 1, i) != 0.0) {
      blocks.push_back({i, 2});
      i += 2;
    } else {
      blocks.push_back({i, 1});
      i += 1;
    }
  }
  return blocks;
}

// Solves S Y + Y S^T = G for upper quasi-triangular S by block
// back-substitution over columns (last to first) and rows (last to first).
Matrix solve_quasi_triangular(const Matrix& s, const Matrix& g,
                              const std::vector<Block>& blocks,
                              double pivot_floor) {
  const Eigen::Index n = s.rows();
  Matrix y = Matrix::Zero(n, n);
  for (auto jb = blocks.rbegin(); jb != blocks.rend(); ++jb) {
    const Eigen::Index j0 = jb->start;
    const Eigen::Index sj = jb->size;
    const Eigen::Index tail = n - j0 - sj;
    Matrix rhs_col = g.middleCols(j0, sj);
    if (tail > 0) {
      rhs_col.noalias() -=
          y.rightCols(tail) * s.block(j0, j0 + sj, sj, tail).transpose();
    }
    const Matrix sjj = s.block(j0, j0, sj, sj);
    for (auto ib = blocks.rbegin(); ib != blocks.rend(); ++ib) {
      const Eigen::Index i0 = ib->start;
      const Eigen::Index si = ib->size;
      const Eigen::Index below = n - i0 - si;
      Matrix rhs = rhs_col.middleRows(i0, si);
      if (below > 0) {
        rhs.noalias() -= s.block(i0, i0 + si, si, below) *
                         y.block(i0 + si, j0, below, sj);
      }
      const Matrix sii = s.block(i0, i0, si, si);
      if (si == 1 && sj == 1) {
        const double pivot = sii(0, 0) + sjj(0, 0);
        if (std::abs(pivot) <= pivot_floor) {
          throw BqoError(ErrorCode::kSingularDecomposition,
                         "Schur back-substitution hit a zero pivot "
                         "(lambda_i + lambda_j = 0)");
        }
        y(i0, j0) = rhs(0, 0) / pivot;
        continue;
      }
      // vec(S_ii Y + Y S_jj^T) = (I (x) S_ii + S_jj (x) I) vec(Y)
      const Matrix k = kron(Matrix::Identity(sj, sj), sii) +
                       kron(sjj, Matrix::Identity(si, si));
      Eigen::FullPivLU<Matrix> lu(k);
      const double min_pivot = lu.matrixLU().diagonal().cwiseAbs().minCoeff();
      if (min_pivot <= pivot_floor) {
        throw BqoError(ErrorCode::kSingularDecomposition,
                       "Schur back-substitution hit a singular 2x2 block "
                       "(lambda_i + lambda_j = 0)");
      }
      const Vector sol = lu.solve(rhs.reshaped());
      y.block(i0, j0, si, sj) = sol.reshaped(si, sj);
    }
  }
  return y;
}

void check_square(const Matrix& m, Eigen::Index n, const char* what) {
  if (m.rows() != n || m.cols() != n) {
    std::ostringstream os;
    os << what << " must be " << n << "x" << n << ", got " << m.rows() << "x"
       << m.cols();
    throw BqoError(ErrorCode::kShapeMismatch, os.str());
  }
}

void check_list(std::span<const Matrix> ns, Eigen::Index n) {
  for (std::size_t k = 0; k < ns.size(); ++k) {
    if (ns[k].rows() != n || ns[k].cols() != n) {
      std::ostringstream os;
      os << "bilinear matrix " << k + 1 << " must be " << n << "x" << n;
      throw BqoError(ErrorCode::kShapeMismatch, os.str());
    }
  }
}

Matrix bilinear_sum(std::span<const Matrix> ns, const Matrix& x, Side side) {
  Matrix acc = Matrix::Zero(x.rows(), x.cols());
  for (const auto& n : ns) {
    if (side == Side::kRight) {
      acc.noalias() += n * x * n.transpose();
    } else {
      acc.noalias() += n.transpose() * x * n;
    }
  }
  return acc;
}

void require_stable(const Matrix& a) {
  Eigen::EigenSolver<Matrix> es(a, false);
  if (es.info() != Eigen::Success) {
    throw BqoError(ErrorCode::kNotStable, "eigenvalue computation failed");
  }
  const double max_re = es.eigenvalues().real().maxCoeff();
  if (!(max_re < 0.0)) {
    std::ostringstream os;
    os << "A is not stable: max Re(lambda) = " << max_re;
    throw BqoError(ErrorCode::kNotStable, os.str());
  }
}

Matrix vectorized_operator(const Matrix& a, std::span<const Matrix> ns,
                           Side side, bool with_linear_part) {
  const Eigen::Index n = a.rows();
  const Matrix id = Matrix::Identity(n, n);
  const Matrix as = side == Side::kRight ? a : Matrix(a.transpose());
  Matrix k = Matrix::Zero(n * n, n * n);
  if (with_linear_part) k = kron(id, as) + kron(as, id);
  for (const auto& nk : ns) {
    const Matrix ns_side = side == Side::kRight ? nk : Matrix(nk.transpose());
    k += kron(ns_side, ns_side);
  }
  return k;
}

}  // namespace

void SolverOptions::validate() const {
  if (!(residual_tol > 0.0) || !(rel_diff_tol > 0.0)) {
    throw BqoError(ErrorCode::kBadOption, "solver tolerances must be > 0");
  }
  if (max_iter < 1) {
    throw BqoError(ErrorCode::kBadOption, "max_iter must be >= 1");
  }
  if (oracle_dim_cap < 1 || oracle_dim_cap > 64) {
    throw BqoError(ErrorCode::kBadOption, "oracle_dim_cap must be in [1, 64]");
  }
}

LyapunovSolver::LyapunovSolver(const Matrix& a) : a_(a) {
  if (a.rows() != a.cols()) {
    throw BqoError(ErrorCode::kShapeMismatch, "A must be square");
  }
  if (!a.allFinite()) {
    throw BqoError(ErrorCode::kNonFinite, "A has non-finite entries");
  }
  Eigen::RealSchur<Matrix> schur(a);
  if (schur.info() != Eigen::Success) {
    throw BqoError(ErrorCode::kSingularDecomposition,
                   "real Schur decomposition did not converge");
  }
  u_ = schur.matrixU();
  t_right_ = schur.matrixT();
  // Eigen leaves roundoff below the quasi-triangular pattern; clear it.
  for (Eigen::Index j = 0; j < t_right_.cols(); ++j)
    for (Eigen::Index i = j + 2; i < t_right_.rows(); ++i) t_right_(i, j) = 0.0;

  for (const auto& b : diagonal_blocks(t_right_)) {
    double re = t_right_(b.start, b.start);
    if (b.size == 2) {
      re = 0.5 * (t_right_(b.start, b.start) +
                  t_right_(b.start + 1, b.start + 1));
    }
    if (!(re < 0.0)) {
      std::ostringstream os;
      os << "A is not stable: eigenvalue with Re = " << re;
      throw BqoError(ErrorCode::kNotStable, os.str());
    }
  }
  t_left_ = t_right_.transpose().reverse();
  scale_ = std::max(t_right_.cwiseAbs().maxCoeff(), 1e-300);
}

Matrix LyapunovSolver::solve(const Matrix& f, Side side) const {
  check_square(f, dim(), "F");
  const double pivot_floor = 10.0 * kEps * scale_;
  const Matrix g = -(u_.transpose() * f * u_);
  Matrix y;
  if (side == Side::kRight) {
    y = solve_quasi_triangular(t_right_, g, diagonal_blocks(t_right_),
                               pivot_floor);
  } else {
    const Matrix yr = solve_quasi_triangular(
        t_left_, g.reverse(), diagonal_blocks(t_left_), pivot_floor);
    y = yr.reverse();
  }
  return symmetrized(u_ * y * u_.transpose());
}

Matrix apply_lyapunov_operator(const Matrix& a, std::span<const Matrix> ns,
                               const Matrix& x, Side side) {
  Matrix out = side == Side::kRight ? Matrix(a * x + x * a.transpose())
                                    : Matrix(a.transpose() * x + x * a);
  out += bilinear_sum(ns, x, side);
  return out;
}

double residual_norm(const Matrix& a, std::span<const Matrix> ns,
                     const Matrix& f, const Matrix& x, Side side) {
  const Eigen::Index n = a.rows();
  check_square(a, n, "A");
  check_square(f, n, "F");
  check_square(x, n, "X");
  check_list(ns, n);
  Matrix r_mat = apply_lyapunov_operator(a, ns, x, side) + f;
  // Symmetric data give a symmetric residual up to roundoff.
  if (x == x.transpose() && f == f.transpose()) r_mat = symmetrized(r_mat);
  const double r = spectral_norm(r_mat);
  const double fn = spectral_norm(f);
  return fn > 0.0 ? r / fn : r;
}

LyapunovSolution solve_standard(const Matrix& a, const Matrix& f, Side side) {
  LyapunovSolver solver(a);
  LyapunovSolution out;
  out.X = solver.solve(f, side);
  out.relative_residual = residual_norm(a, {}, f, out.X, side);
  out.iterations = 1;
  out.converged = out.relative_residual <= SolverOptions{}.residual_tol;
  return out;
}

LyapunovSolution solve_generalized_fixed_point(const LyapunovSolver& solver,
                                               std::span<const Matrix> ns,
                                               const Matrix& f, Side side,
                                               const SolverOptions& opts,
                                               const IterateObserver& observer) {
  opts.validate();
  const Matrix& a = solver.a();
  check_square(f, a.rows(), "F");
  check_list(ns, a.rows());

  LyapunovSolution out;
  out.X = solver.solve(f, side);
  out.iterations = 1;
  out.relative_residual = residual_norm(a, ns, f, out.X, side);
  if (observer) observer(1, out.X);
  if (out.relative_residual <= opts.residual_tol) {
    out.converged = true;
    return out;
  }
  for (int it = 2; it <= opts.max_iter; ++it) {
    Matrix next = solver.solve(f + bilinear_sum(ns, out.X, side), side);
    const double xn = spectral_norm(next);
    const double change =
        xn > 0.0 ? spectral_norm(next - out.X) / xn : 0.0;
    out.X = std::move(next);
    out.iterations = it;
    out.relative_residual = residual_norm(a, ns, f, out.X, side);
    if (observer) observer(it, out.X);
    if (!std::isfinite(out.relative_residual)) break;
    if (out.relative_residual <= opts.residual_tol) {
      out.converged = true;
      return out;
    }
    if (change <= opts.rel_diff_tol) {
      out.converged = false;
      return out;
    }
  }
  std::ostringstream os;
  os << "fixed-point iteration did not converge after " << out.iterations
     << " sweeps (last relative residual " << out.relative_residual
     << "); rho(L_A^{-1} Pi) may be >= 1";
  throw NoConvergenceError(os.str(), out.relative_residual, out.iterations);
}

LyapunovSolution solve_generalized_fixed_point(const Matrix& a,
                                               std::span<const Matrix> ns,
                                               const Matrix& f, Side side,
                                               const SolverOptions& opts) {
  LyapunovSolver solver(a);
  return solve_generalized_fixed_point(solver, ns, f, side, opts);
}

LyapunovSolution solve_generalized_kron_oracle(const Matrix& a,
                                               std::span<const Matrix> ns,
                                               const Matrix& f, Side side,
                                               const SolverOptions& opts) {
  opts.validate();
  const Eigen::Index n = a.rows();
  check_square(a, n, "A");
  check_square(f, n, "F");
  check_list(ns, n);
  if (n > opts.oracle_dim_cap) {
    std::ostringstream os;
    os << "Kronecker oracle limited to n <= " << opts.oracle_dim_cap
       << ", got n = " << n;
    throw BqoError(ErrorCode::kDimTooLarge, os.str());
  }
  const Matrix k = vectorized_operator(a, ns, side, true);
  Eigen::PartialPivLU<Matrix> lu(k);
  // Conditioning relative to the size of the summands, so exact cancellation
  // between L_A and Pi is caught even when K itself is tiny and well scaled.
  double scale = 2.0 * a.cwiseAbs().colwise().sum().maxCoeff();
  for (const auto& nk : ns) {
    const double nn = nk.cwiseAbs().colwise().sum().maxCoeff();
    scale += nn * nn;
  }
  const double knorm = k.cwiseAbs().colwise().sum().maxCoeff();
  const double rcond = scale > 0.0 ? lu.rcond() * knorm / scale : 0.0;
  if (!(rcond > 100.0 * kEps)) {
    throw BqoError(ErrorCode::kSingularOperator,
                   "vectorized generalized Lyapunov operator is singular");
  }
  const Vector rhs = -f.reshaped();
  const Vector sol = lu.solve(rhs);
  LyapunovSolution out;
  out.X = symmetrized(sol.reshaped(n, n));
  out.relative_residual = residual_norm(a, ns, f, out.X, side);
  out.iterations = 1;
  out.converged = out.relative_residual <= opts.residual_tol;
  return out;
}

SpectralRadiusCertificate spectral_radius_certificate(
    const Matrix& a, std::span<const Matrix> ns, const SolverOptions& opts) {
  opts.validate();
  const Eigen::Index n = a.rows();
  check_square(a, n, "A");
  check_list(ns, n);
  if (n > opts.oracle_dim_cap) {
    std::ostringstream os;
    os << "spectral radius certificate limited to n <= "
       << opts.oracle_dim_cap;
    throw BqoError(ErrorCode::kDimTooLarge, os.str());
  }
  require_stable(a);
  SpectralRadiusCertificate cert;
  if (ns.empty()) {
    cert.rho = 0.0;
    cert.admissible = true;
    return cert;
  }
  const Matrix la = vectorized_operator(a, {}, Side::kRight, true);
  const Matrix pi = vectorized_operator(a, ns, Side::kRight, false);
  const Matrix t = -la.partialPivLu().solve(pi);
  Eigen::EigenSolver<Matrix> es(t, false);
  cert.rho = es.eigenvalues().cwiseAbs().maxCoeff();
  cert.admissible = cert.rho < 1.0;
  return cert;
}

double default_clip_tol(Eigen::Index n) {
  return static_cast<double>(std::max<Eigen::Index>(n, 1)) * kEps;
}

Matrix psd_factor(const Matrix& x, const PsdFactorOptions& opts) {
  const Eigen::Index n = x.rows();
  check_square(x, n, "X");
  const double clip = opts.clip_tol < 0.0 ? default_clip_tol(n) : opts.clip_tol;
  const double neg = opts.negative_tol < 0.0 ? clip : opts.negative_tol;
  if (n == 0) return Matrix(0, 0);

  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrized(x));
  const Vector& ev = es.eigenvalues();  // ascending
  const double lmax = ev(n - 1);
  const double lmin = ev(0);
  if (lmax <= 0.0) {
    if (lmin < 0.0) {
      throw BqoError(ErrorCode::kNotPsd, "matrix is negative definite");
    }
    return Matrix(n, 0);
  }
  if (lmin < -neg * lmax) {
    std::ostringstream os;
    os << "matrix is not positive semidefinite: lambda_min / lambda_max = "
       << lmin / lmax;
    throw BqoError(ErrorCode::kNotPsd, os.str());
  }
  Eigen::Index keep = 0;
  for (Eigen::Index i = 0; i < n; ++i)
    if (ev(i) > clip * lmax) ++keep;
  Matrix l(n, keep);
  for (Eigen::Index c = 0; c < keep; ++c) {
    const Eigen::Index i = n - 1 - c;
    l.col(c) = es.eigenvectors().col(i) * std::sqrt(ev(i));
  }
  return l;
}

Matrix psd_factor(const Matrix& x, double clip_tol) {
  return psd_factor(x, PsdFactorOptions{clip_tol, clip_tol});
}

Matrix psd_factor(const Matrix& x) { return psd_factor(x, PsdFactorOptions{}); }

}  // namespace bqo
