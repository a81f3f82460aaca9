#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

namespace bqo {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using MatrixList = std::vector<Matrix>;

/// Spectral norm. Symmetric inputs go through the symmetric eigensolver.
double spectral_norm(const Matrix& m);

/// (m + m^T) / 2. The result is bit-exactly symmetric.
Matrix symmetrized(const Matrix& m);

/// Kronecker product a (x) b.
Matrix kron(const Matrix& a, const Matrix& b);

/// Horizontal concatenation [m_1, ..., m_q]; `transpose` stacks m_k^T instead.
Matrix hstack(std::span<const Matrix> ms, bool transpose = false);

/// Smallest and largest eigenvalue of a symmetric matrix.
struct EigenRange {
  double min;
  double max;
};
EigenRange eigen_range(const Matrix& sym);

}  // namespace bqo
