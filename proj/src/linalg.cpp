#include "bqo/linalg.hpp"

#include <algorithm>
#include <cmath>

#include "bqo/error.hpp"

namespace bqo {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kNotStable: return "NotStable";
    case ErrorCode::kSingularDecomposition: return "SingularDecomposition";
    case ErrorCode::kNoConvergence: return "NoConvergence";
    case ErrorCode::kDimTooLarge: return "DimTooLarge";
    case ErrorCode::kSingularOperator: return "SingularOperator";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kNonFinite: return "NonFinite";
    case ErrorCode::kNotPsd: return "NotPsd";
    case ErrorCode::kVerificationFailed: return "VerificationFailed";
    case ErrorCode::kBadGamma: return "BadGamma";
    case ErrorCode::kRankDeficient: return "RankDeficient";
    case ErrorCode::kNonFiniteState: return "NonFiniteState";
    case ErrorCode::kGridMismatch: return "GridMismatch";
    case ErrorCode::kBadSpec: return "BadSpec";
    case ErrorCode::kNotInKernel: return "NotInKernel";
    case ErrorCode::kBadOption: return "BadOption";
    case ErrorCode::kIo: return "Io";
  }
  return "Unknown";
}

double spectral_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  if (m.rows() == m.cols() && m == m.transpose()) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
    const auto& ev = es.eigenvalues();
    return std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
  }
  Eigen::BDCSVD<Matrix> svd(m);
  return svd.singularValues()(0);
}

Matrix symmetrized(const Matrix& m) {
  Matrix s = 0.5 * (m + m.transpose());
  // Addition commutes in IEEE arithmetic, but enforce the mirror anyway so
  // expression-template evaluation order cannot leave stray ulps.
  for (Eigen::Index j = 0; j < s.cols(); ++j)
    for (Eigen::Index i = j + 1; i < s.rows(); ++i) s(j, i) = s(i, j);
  return s;
}

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

Matrix hstack(std::span<const Matrix> ms, bool transpose) {
  if (ms.empty()) return Matrix();
  const Eigen::Index rows = transpose ? ms[0].cols() : ms[0].rows();
  Eigen::Index cols = 0;
  for (const auto& m : ms) cols += transpose ? m.rows() : m.cols();
  Matrix out(rows, cols);
  Eigen::Index c = 0;
  for (const auto& m : ms) {
    if (transpose) {
      out.middleCols(c, m.rows()) = m.transpose();
      c += m.rows();
    } else {
      out.middleCols(c, m.cols()) = m;
      c += m.cols();
    }
  }
  return out;
}

EigenRange eigen_range(const Matrix& sym) {
  if (sym.size() == 0) return {0.0, 0.0};
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym, Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();
  return {ev(0), ev(ev.size() - 1)};
}

}  // namespace bqo
