#include "bqo/benchmarks.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include <Eigen/QR>

#include "bqo/error.hpp"

namespace bqo {

std::string_view to_string(HeatOutput v) {
  return v == HeatOutput::kOnesQuadratic ? "ones_quadratic"
                                         : "identity_quadratic";
}

std::optional<HeatOutput> parse_heat_output(std::string_view tag) {
  if (tag == "ones" || tag == "ones_quadratic") return HeatOutput::kOnesQuadratic;
  if (tag == "identity" || tag == "identity_quadratic") {
    return HeatOutput::kIdentityQuadratic;
  }
  return std::nullopt;
}

BqoSystem heat_system(const HeatBenchmarkSpec& spec) {
  if (spec.k < 3) {
    throw BqoError(ErrorCode::kBadSpec, "heat benchmark needs k >= 3");
  }
  if (!(spec.gamma > 0.0 && spec.gamma <= 1.0)) {
    throw BqoError(ErrorCode::kBadSpec, "heat benchmark gamma must be in (0, 1]");
  }
  const int k = spec.k;
  const Eigen::Index n = static_cast<Eigen::Index>(k) * k;
  const double h = 1.0 / (k + 1);

  // 1D second difference; the first node has a Robin ghost x_0 = x_1 + h u (x_1 - 1).
  Matrix t = Matrix::Zero(k, k);
  for (int i = 0; i < k; ++i) {
    t(i, i) = -2.0;
    if (i > 0) t(i, i - 1) = 1.0;
    if (i + 1 < k) t(i, i + 1) = 1.0;
  }
  t(0, 0) = -1.0;
  const Matrix eye = Matrix::Identity(k, k);
  Matrix a = (kron(eye, t) + kron(t, eye)) / (h * h);

  Matrix b = Matrix::Zero(n, 2);
  MatrixList ns(2, Matrix::Zero(n, n));
  for (int s = 0; s < k; ++s) {
    const Eigen::Index left = static_cast<Eigen::Index>(s) * k;  // i = 1, j = s + 1
    const Eigen::Index bottom = s;                               // j = 1, i = s + 1
    ns[0](left, left) = 1.0 / h;
    b(left, 0) = -1.0 / h;
    ns[1](bottom, bottom) = 1.0 / h;
    b(bottom, 1) = -1.0 / h;
  }

  Matrix c = Matrix::Zero(2, n);
  c.row(0).setConstant(1.0 / (static_cast<double>(k) * k));
  MatrixList ms(2, Matrix::Zero(n, n));
  if (spec.output_variant == HeatOutput::kOnesQuadratic) {
    ms[1].setConstant(1.0 / std::pow(static_cast<double>(k), 4));
  } else {
    ms[1] = Matrix::Identity(n, n) / (static_cast<double>(k) * k);
  }

  BqoSystem sys = BqoSystem::build(std::move(a), std::move(b), std::move(c),
                                   std::move(ns), std::move(ms));
  return spec.gamma == 1.0 ? sys : scale_input(sys, spec.gamma);
}

BqoSystem random_admissible(int n, int m, int p, std::uint64_t seed,
                            double margin) {
  if (n < 1 || m < 1 || p < 1) {
    throw BqoError(ErrorCode::kBadSpec, "dimensions must be positive");
  }
  if (!(margin > 0.0 && margin < 1.0)) {
    throw BqoError(ErrorCode::kBadSpec, "margin must be in (0, 1)");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  std::uniform_real_distribution<double> unif;
  auto randn = [&](Eigen::Index r, Eigen::Index c) {
    Matrix x(r, c);
    for (Eigen::Index j = 0; j < c; ++j)
      for (Eigen::Index i = 0; i < r; ++i) x(i, j) = gauss(rng);
    return x;
  };

  Eigen::HouseholderQR<Matrix> qr(randn(n, n));
  Matrix q = qr.householderQ();
  // Haar measure: fix the column signs by the diagonal of R.
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index i = 0; i < n; ++i)
    if (r(i, i) < 0.0) q.col(i) *= -1.0;

  Vector d(n);
  for (Eigen::Index i = 0; i < n; ++i) d(i) = -(1.0 + 9.0 * unif(rng));
  Matrix a = symmetrized(q.transpose() * d.asDiagonal() * q);

  Matrix b = randn(n, m);
  Matrix c = randn(p, n);
  MatrixList ns;
  for (int k = 0; k < m; ++k) ns.push_back(randn(n, n));
  MatrixList ms;
  for (int j = 0; j < p; ++j) ms.push_back(symmetrized(randn(n, n)));

  const StabilityParams sp = stability_params(a);
  const double target = margin * 2.0 * sp.alpha / (sp.beta * sp.beta);
  const double gn = std::max(std::pow(spectral_norm(hstack(ns, false)), 2),
                             std::pow(spectral_norm(hstack(ns, true)), 2));
  const double gm = std::pow(spectral_norm(hstack(ms, false)), 2);
  for (auto& nk : ns) nk *= std::sqrt(target / gn);
  for (auto& mj : ms) mj *= std::sqrt(target / gm);

  return BqoSystem::build(std::move(a), std::move(b), std::move(c),
                          std::move(ns), std::move(ms));
}

}  // namespace bqo
