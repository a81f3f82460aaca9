#include "bqo/system.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <utility>

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/MatrixFunctions>

#include "bqo/error.hpp"

namespace bqo {
namespace {

constexpr int kSampleCount = 64;
constexpr double kDefectiveCondition = 1e8;
constexpr double kBoundSlack = 1e-8;
constexpr int kRefineSteps = 40;

void require_shape(const Matrix& m, Eigen::Index rows, Eigen::Index cols,
                   const std::string& name) {
  if (m.rows() != rows || m.cols() != cols) {
    std::ostringstream os;
    os << name << " must be " << rows << "x" << cols << ", got " << m.rows()
       << "x" << m.cols();
    throw BqoError(ErrorCode::kShapeMismatch, os.str());
  }
  if (!m.allFinite()) {
    throw BqoError(ErrorCode::kNonFinite, name + " has non-finite entries");
  }
}

MatrixList scaled_list(const MatrixList& ns, double gamma) {
  MatrixList out;
  out.reserve(ns.size());
  for (const auto& n : ns) out.push_back(gamma * n);
  return out;
}

std::vector<double> sample_grid(double alpha) {
  std::vector<double> ts;
  ts.reserve(kSampleCount);
  const double lo = std::log(1e-3 / alpha);
  const double hi = std::log(20.0 / alpha);
  for (int i = 0; i < kSampleCount; ++i) {
    ts.push_back(std::exp(lo + (hi - lo) * i / (kSampleCount - 1)));
  }
  return ts;
}

std::vector<double> exp_norm_samples(const Matrix& a,
                                     const std::vector<double>& ts) {
  std::vector<double> out;
  out.reserve(ts.size());
  for (double t : ts) {
    const Matrix e = (a * t).exp();
    out.push_back(spectral_norm(e));
  }
  return out;
}

// Golden-section refinement of max_t ||e^{At}|| e^{alpha t} on [lo, hi].
// The log-spaced grid alone can miss the top of the peak.
double refine_peak(const Matrix& a, double alpha, double lo, double hi) {
  const auto g = [&](double t) {
    return spectral_norm((a * t).exp()) * std::exp(alpha * t);
  };
  const double ratio = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = hi - ratio * (hi - lo);
  double x2 = lo + ratio * (hi - lo);
  double g1 = g(x1);
  double g2 = g(x2);
  for (int it = 0; it < kRefineSteps; ++it) {
    if (g1 < g2) {
      lo = x1;
      x1 = x2;
      g1 = g2;
      x2 = lo + ratio * (hi - lo);
      g2 = g(x2);
    } else {
      hi = x2;
      x2 = x1;
      g2 = g1;
      x1 = hi - ratio * (hi - lo);
      g1 = g(x1);
    }
  }
  return std::max(g1, g2);
}

}  // namespace

BqoSystem::BqoSystem(Matrix a, Matrix b, Matrix c, MatrixList ns,
                     MatrixList ms, double input_scale)
    : a_(std::move(a)),
      b_(std::move(b)),
      c_(std::move(c)),
      ns_(std::move(ns)),
      ms_(std::move(ms)),
      input_scale_(input_scale),
      b_scaled_(input_scale_ * b_),
      n_scaled_(scaled_list(ns_, input_scale_)) {}

BqoSystem BqoSystem::build(Matrix a, Matrix b, Matrix c, MatrixList ns,
                           MatrixList ms) {
  const Eigen::Index n = a.rows();
  require_shape(a, n, n, "A");
  require_shape(b, n, b.cols(), "B");
  require_shape(c, c.rows(), n, "C");
  if (static_cast<Eigen::Index>(ns.size()) != b.cols()) {
    std::ostringstream os;
    os << "expected " << b.cols() << " bilinear matrices (columns of B), got "
       << ns.size();
    throw BqoError(ErrorCode::kShapeMismatch, os.str());
  }
  if (static_cast<Eigen::Index>(ms.size()) != c.rows()) {
    std::ostringstream os;
    os << "expected " << c.rows() << " quadratic output matrices (rows of C), got "
       << ms.size();
    throw BqoError(ErrorCode::kShapeMismatch, os.str());
  }
  for (std::size_t k = 0; k < ns.size(); ++k) {
    require_shape(ns[k], n, n, "N" + std::to_string(k + 1));
  }
  for (std::size_t j = 0; j < ms.size(); ++j) {
    require_shape(ms[j], n, n, "M" + std::to_string(j + 1));
    ms[j] = symmetrized(ms[j]);
  }
  return BqoSystem(std::move(a), std::move(b), std::move(c), std::move(ns),
                   std::move(ms), 1.0);
}

BqoSystem BqoSystem::unscaled() const {
  return BqoSystem(a_, b_, c_, ns_, ms_, 1.0);
}

Matrix BqoSystem::stacked_N() const {
  return n_scaled_.empty() ? Matrix(n(), 0) : hstack(n_scaled_);
}

Matrix BqoSystem::stacked_NT() const {
  return n_scaled_.empty() ? Matrix(n(), 0) : hstack(n_scaled_, true);
}

Matrix BqoSystem::stacked_M() const {
  return ms_.empty() ? Matrix(n(), 0) : hstack(ms_);
}

BqoSystem scale_input(const BqoSystem& sys, double gamma) {
  if (!(gamma > 0.0 && gamma <= 1.0)) {
    std::ostringstream os;
    os << "input scaling gamma must lie in (0, 1], got " << gamma;
    throw BqoError(ErrorCode::kBadGamma, os.str());
  }
  return BqoSystem(sys.a_, sys.b_, sys.c_, sys.ns_, sys.ms_,
                   sys.input_scale_ * gamma);
}

bool verify_stability_bound(const Matrix& a, double alpha, double beta) {
  const auto ts = sample_grid(alpha);
  const auto norms = exp_norm_samples(a, ts);
  for (std::size_t i = 0; i < ts.size(); ++i) {
    if (norms[i] * std::exp(alpha * ts[i]) > beta * (1.0 + kBoundSlack)) {
      return false;
    }
  }
  return true;
}

StabilityParams stability_params(const Matrix& a) {
  if (a.rows() != a.cols() || a.rows() == 0) {
    throw BqoError(ErrorCode::kShapeMismatch, "A must be square and nonempty");
  }
  Eigen::EigenSolver<Matrix> es(a, true);
  if (es.info() != Eigen::Success) {
    throw BqoError(ErrorCode::kNotStable, "eigendecomposition of A failed");
  }
  const double max_re = es.eigenvalues().real().maxCoeff();
  if (!(max_re < 0.0)) {
    std::ostringstream os;
    os << "A is not stable: max Re(lambda) = " << max_re;
    throw BqoError(ErrorCode::kNotStable, os.str());
  }

  StabilityParams out;
  out.alpha = -max_re;
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(es.eigenvectors());
  const auto& sv = svd.singularValues();
  const double smin = sv(sv.size() - 1);
  const double cond =
      smin > 0.0 ? sv(0) / smin : std::numeric_limits<double>::infinity();
  if (cond < kDefectiveCondition) {
    out.beta = std::max(1.0, cond);
    if (verify_stability_bound(a, out.alpha, out.beta)) return out;
  }

  // Sampled supremum with a shrinking decay rate. Accept once the sampled
  // profile has peaked inside the grid instead of still growing at its end.
  out.from_eigenvectors = false;
  double alpha = out.alpha;
  for (int round = 1; round <= 10; ++round) {
    alpha *= 0.9;
    const auto ts = sample_grid(alpha);
    const auto norms = exp_norm_samples(a, ts);
    double sup = 1.0;
    std::size_t arg = 0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
      const double g = norms[i] * std::exp(alpha * ts[i]);
      if (g > sup) {
        sup = g;
        arg = i;
      }
    }
    if (arg + 1 < ts.size()) {
      const double lo = arg > 0 ? ts[arg - 1] : 0.0;
      out.alpha = alpha;
      out.beta = std::max(sup, refine_peak(a, alpha, lo, ts[arg + 1]));
      out.fallback_rounds = round;
      return out;
    }
  }
  throw BqoError(ErrorCode::kVerificationFailed,
                 "could not certify ||e^{At}|| <= beta e^{-alpha t} on the "
                 "sample grid");
}

StabilityCertificate existence_margins(const BqoSystem& sys) {
  return existence_margins(sys, stability_params(sys.A()));
}

StabilityCertificate existence_margins(const BqoSystem& sys,
                                       const StabilityParams& params) {
  StabilityCertificate cert;
  cert.alpha = params.alpha;
  cert.beta = params.beta;
  cert.threshold = 2.0 * params.alpha / (params.beta * params.beta);

  // ||[G_1 .. G_q]||^2 = ||sum_k G_k G_k^T||.
  const Eigen::Index n = sys.n();
  Matrix nn = Matrix::Zero(n, n);
  Matrix ntnt = Matrix::Zero(n, n);
  for (const auto& nk : sys.N()) {
    nn.noalias() += nk * nk.transpose();
    ntnt.noalias() += nk.transpose() * nk;
    const double s = spectral_norm(nk);
    cert.loose_sum_N += s * s;
  }
  Matrix mm = Matrix::Zero(n, n);
  for (const auto& mj : sys.M()) {
    mm.noalias() += mj * mj;
    const double s = spectral_norm(mj);
    cert.loose_sum_M += s * s;
  }
  const double norm_n = spectral_norm(symmetrized(nn));
  const double norm_nt = spectral_norm(symmetrized(ntnt));
  const double norm_m = spectral_norm(symmetrized(mm));

  cert.gamma_P = norm_n;
  cert.gamma_QS = std::max({norm_n, norm_nt, norm_m});
  cert.gamma_QA = std::max(norm_n, norm_m);
  cert.exists_P = cert.gamma_P < cert.threshold;
  cert.exists_QS = cert.gamma_QS < cert.threshold;
  cert.exists_QA = cert.gamma_QA < cert.threshold;
  return cert;
}

}  // namespace bqo
