#include "bqo/reduction.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "bqo/error.hpp"
#include "bqo/lyapunov.hpp"

namespace bqo {
namespace {

constexpr double kGramianNegativeTol = 1e-10;

void fix_signs(Matrix& z, Matrix& y) {
  for (Eigen::Index c = 0; c < z.cols(); ++c) {
    Eigen::Index arg = 0;
    z.col(c).cwiseAbs().maxCoeff(&arg);
    if (z(arg, c) < 0.0) {
      z.col(c) *= -1.0;
      y.col(c) *= -1.0;
    }
  }
}

}  // namespace

Vector hankel_singular_values(const Matrix& u, const Matrix& l) {
  if (u.rows() != l.rows()) {
    throw BqoError(ErrorCode::kShapeMismatch,
                   "factors U and L must have the same number of rows");
  }
  if (u.cols() == 0 || l.cols() == 0) return Vector(0);
  const Matrix ul = u.transpose() * l;
  Eigen::BDCSVD<Matrix> svd(ul);
  return svd.singularValues();
}

BalancingResult balanced_truncation(const BqoSystem& sys, const Matrix& u,
                                    const Matrix& l, int r,
                                    const BalancingOptions& opts) {
  if (u.rows() != sys.n() || l.rows() != sys.n()) {
    std::ostringstream os;
    os << "Gramian factors must have " << sys.n() << " rows";
    throw BqoError(ErrorCode::kShapeMismatch, os.str());
  }
  if (r < 1) {
    throw BqoError(ErrorCode::kShapeMismatch, "reduced order must be >= 1");
  }

  const Matrix ul = u.transpose() * l;
  Eigen::BDCSVD<Matrix> svd(ul, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector sv = svd.singularValues();
  int rank = 0;
  if (sv.size() > 0 && sv(0) > 0.0) {
    for (Eigen::Index i = 0; i < sv.size(); ++i)
      if (sv(i) > opts.rank_tol * sv(0)) ++rank;
  }
  if (r > rank) {
    std::ostringstream os;
    os << "requested order " << r << " exceeds the numerical rank " << rank
       << " of U^T L";
    throw RankDeficientError(os.str(), rank);
  }

  std::vector<std::string> warnings;
  if (r < sv.size() && sv(r - 1) - sv(r) <= opts.tie_tol * sv(0)) {
    std::ostringstream os;
    os << "sigma_" << r << " and sigma_" << r + 1
       << " tie within tolerance; truncation boundary is not unique";
    warnings.push_back(os.str());
  }

  Matrix z = svd.matrixU().leftCols(r);
  Matrix y = svd.matrixV().leftCols(r);
  fix_signs(z, y);
  const Vector inv_sqrt = sv.head(r).cwiseSqrt().cwiseInverse();
  const Matrix w = l * y * inv_sqrt.asDiagonal();  // W = L Y_1 S_1^{-1/2}
  const Matrix v = u * z * inv_sqrt.asDiagonal();

  MatrixList ns;
  ns.reserve(sys.unscaled_N().size());
  for (const auto& nk : sys.unscaled_N()) ns.push_back(w.transpose() * nk * v);
  MatrixList ms;
  ms.reserve(sys.M().size());
  for (const auto& mj : sys.M()) ms.push_back(v.transpose() * mj * v);

  BqoSystem reduced = BqoSystem::build(w.transpose() * sys.A() * v,
                                       w.transpose() * sys.unscaled_B(),
                                       sys.C() * v, std::move(ns),
                                       std::move(ms));
  if (sys.input_scale() != 1.0) {
    reduced = scale_input(reduced, sys.input_scale());
  }
  return BalancingResult{sv, w, v, std::move(reduced), rank,
                         std::move(warnings)};
}

HsvComparison hsv_compare(const Matrix& u, const Matrix& l_a,
                          const Matrix& l_b) {
  HsvComparison out;
  out.hsv_a = hankel_singular_values(u, l_a);
  out.hsv_b = hankel_singular_values(u, l_b);
  const Eigen::Index len = std::max(out.hsv_a.size(), out.hsv_b.size());
  const double top = out.hsv_b.size() > 0 ? out.hsv_b(0) : 0.0;
  out.dominated = true;
  for (Eigen::Index i = 0; i < len; ++i) {
    const double a = i < out.hsv_a.size() ? out.hsv_a(i) : 0.0;
    const double b = i < out.hsv_b.size() ? out.hsv_b(i) : 0.0;
    if (a > b + 1e-10 * top) {
      out.dominated = false;
      break;
    }
  }
  return out;
}

Matrix gramian_factor(const Matrix& gramian) {
  PsdFactorOptions opts;
  opts.negative_tol = kGramianNegativeTol;
  return psd_factor(gramian, opts);
}

BalancingResult reduce_with(const BqoSystem& sys, const GramianSet& gramians,
                            int r, const BalancingOptions& opts) {
  if (gramians.Q.size() == 0) {
    throw BqoError(ErrorCode::kShapeMismatch,
                   "Gramian set has no observability Gramian");
  }
  return balanced_truncation(sys, gramian_factor(gramians.P),
                             gramian_factor(gramians.Q), r, opts);
}

}  // namespace bqo
