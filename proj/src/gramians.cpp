#include "bqo/gramians.hpp"

#include <sstream>

#include <Eigen/Eigenvalues>

#include "bqo/error.hpp"

namespace bqo {
namespace {

constexpr double kPsdTol = 1e-10;
constexpr double kSeriesStopTol = 1e-12;

Matrix sum_mpm(const BqoSystem& sys, const Matrix& p) {
  Matrix acc = Matrix::Zero(sys.n(), sys.n());
  for (const auto& m : sys.M()) acc.noalias() += m * p * m;
  return symmetrized(acc);
}

Matrix sum_ntqn(const BqoSystem& sys, const Matrix& q) {
  Matrix acc = Matrix::Zero(sys.n(), sys.n());
  for (const auto& n : sys.N()) acc.noalias() += n.transpose() * q * n;
  return symmetrized(acc);
}

Matrix sum_npn(const BqoSystem& sys, const Matrix& p) {
  Matrix acc = Matrix::Zero(sys.n(), sys.n());
  for (const auto& n : sys.N()) acc.noalias() += n * p * n.transpose();
  return symmetrized(acc);
}

Matrix bbt(const BqoSystem& sys) {
  return symmetrized(sys.B() * sys.B().transpose());
}

Matrix ctc(const BqoSystem& sys) {
  return symmetrized(sys.C().transpose() * sys.C());
}

void check_gramian_shape(const BqoSystem& sys, const Matrix& p,
                         const char* name) {
  if (p.rows() != sys.n() || p.cols() != sys.n()) {
    std::ostringstream os;
    os << name << " must be " << sys.n() << "x" << sys.n();
    throw BqoError(ErrorCode::kShapeMismatch, os.str());
  }
}

void require_psd(const Matrix& x, const std::string& name) {
  const auto range = eigen_range(x);
  if (range.min < -kPsdTol * std::max(range.max, 0.0) ||
      (range.max <= 0.0 && range.min < 0.0)) {
    std::ostringstream os;
    os << "Gramian " << name << " is not positive semidefinite (lambda_min = "
       << range.min << ", lambda_max = " << range.max << ")";
    throw BqoError(ErrorCode::kNotPsd, os.str());
  }
}

struct StandardSolve {
  Matrix x;
  double residual;
};

StandardSolve standard(const LyapunovSolver& solver, const Matrix& f,
                       Side side) {
  StandardSolve out;
  out.x = solver.solve(f, side);
  out.residual = residual_norm(solver.a(), {}, f, out.x, side);
  return out;
}

}  // namespace

std::string_view to_string(GramianVariant v) {
  switch (v) {
    case GramianVariant::kStandard: return "S";
    case GramianVariant::kPadhi: return "P";
    case GramianVariant::kAlternative: return "A";
    case GramianVariant::kMixed: return "M";
    case GramianVariant::kTruncatedStandard: return "TS";
    case GramianVariant::kTruncatedPadhi: return "TP";
    case GramianVariant::kTruncatedAlternative: return "TA";
    case GramianVariant::kReach: return "reach";
    case GramianVariant::kTruncatedReach: return "Treach";
  }
  return "?";
}

std::optional<GramianVariant> parse_gramian_variant(std::string_view tag) {
  for (auto v : {GramianVariant::kStandard, GramianVariant::kPadhi,
                 GramianVariant::kAlternative, GramianVariant::kMixed,
                 GramianVariant::kTruncatedStandard,
                 GramianVariant::kTruncatedPadhi,
                 GramianVariant::kTruncatedAlternative, GramianVariant::kReach,
                 GramianVariant::kTruncatedReach}) {
    if (to_string(v) == tag) return v;
  }
  return std::nullopt;
}

LyapunovSolution reach_gramian(const BqoSystem& sys,
                               const SolverOptions& opts) {
  LyapunovSolver solver(sys.A());
  return solve_generalized_fixed_point(solver, sys.N(), bbt(sys), Side::kRight,
                                       opts);
}

LyapunovSolution obs_gramian_standard(const BqoSystem& sys, const Matrix& p,
                                      const SolverOptions& opts) {
  check_gramian_shape(sys, p, "P");
  LyapunovSolver solver(sys.A());
  return solve_generalized_fixed_point(solver, sys.N(),
                                       sum_mpm(sys, p) + ctc(sys), Side::kLeft,
                                       opts);
}

LyapunovSolution obs_gramian_alternative(const BqoSystem& sys,
                                         const Matrix& p) {
  check_gramian_shape(sys, p, "P");
  return solve_standard(sys.A(), sum_mpm(sys, p) + ctc(sys), Side::kLeft);
}

LyapunovSolution obs_gramian_mixed(const BqoSystem& sys, const Matrix& p,
                                   const std::vector<double>& phi,
                                   const SolverOptions& opts) {
  check_gramian_shape(sys, p, "P");
  if (static_cast<Eigen::Index>(phi.size()) != sys.m()) {
    std::ostringstream os;
    os << "phi needs one entry per input (" << sys.m() << "), got "
       << phi.size();
    throw BqoError(ErrorCode::kShapeMismatch, os.str());
  }
  MatrixList weighted;
  weighted.reserve(phi.size());
  for (std::size_t k = 0; k < phi.size(); ++k) {
    if (!(phi[k] >= 0.0 && phi[k] <= 1.0)) {
      throw BqoError(ErrorCode::kBadOption, "phi entries must lie in [0, 1]");
    }
    weighted.push_back(phi[k] * sys.N()[k]);
  }
  LyapunovSolver solver(sys.A());
  return solve_generalized_fixed_point(solver, weighted,
                                       sum_mpm(sys, p) + ctc(sys), Side::kLeft,
                                       opts);
}

Matrix SeriesTerms::padhi_partial_sum(int d) const {
  d = std::min(d, depth);
  Matrix acc = Matrix::Zero(QB_terms.front().rows(), QB_terms.front().cols());
  for (int i = 1; i <= d; ++i) acc += QB_terms[i - 1];
  for (int i = 1; i <= d; ++i)
    for (int j = 1; i + j <= d + 1; ++j) acc += cross_terms[i - 1][j - 1];
  return acc;
}

Matrix SeriesTerms::reach_partial_sum(int d) const {
  d = std::min(d, depth);
  Matrix acc = Matrix::Zero(P_terms.front().rows(), P_terms.front().cols());
  for (int i = 1; i <= d; ++i) acc += P_terms[i - 1];
  return acc;
}

Matrix SeriesTerms::standard_partial_sum(int d) const {
  d = std::min(d, depth);
  Matrix acc = Matrix::Zero(QS_terms.front().rows(), QS_terms.front().cols());
  for (int i = 1; i <= d; ++i) acc += QS_terms[i - 1];
  return acc;
}

SeriesTerms series_terms(const BqoSystem& sys, int depth) {
  if (depth < 1) {
    throw BqoError(ErrorCode::kBadOption, "series depth must be >= 1");
  }
  LyapunovSolver solver(sys.A());
  SeriesTerms out;
  Matrix p_sum = Matrix::Zero(sys.n(), sys.n());
  Matrix qs_sum = p_sum;

  for (int i = 1; i <= depth; ++i) {
    Matrix p_i, qs_i, qb_i;
    if (i == 1) {
      p_i = solver.solve(bbt(sys), Side::kRight);
      qs_i = solver.solve(ctc(sys), Side::kLeft);
      qb_i = qs_i;
    } else {
      p_i = solver.solve(sum_npn(sys, out.P_terms.back()), Side::kRight);
      qs_i = solver.solve(sum_ntqn(sys, out.QS_terms.back()) +
                              sum_mpm(sys, out.P_terms.back()),
                          Side::kLeft);
      qb_i = solver.solve(sum_ntqn(sys, out.QB_terms.back()), Side::kLeft);
    }
    p_sum += p_i;
    qs_sum += qs_i;
    const bool negligible =
        i > 1 && spectral_norm(p_i) < kSeriesStopTol * spectral_norm(p_sum) &&
        spectral_norm(qs_i) < kSeriesStopTol * spectral_norm(qs_sum);
    out.P_terms.push_back(std::move(p_i));
    out.QS_terms.push_back(std::move(qs_i));
    out.QB_terms.push_back(std::move(qb_i));
    out.depth = i;
    if (negligible) break;
  }

  const int d = out.depth;
  out.cross_terms.resize(d);
  for (int j = 1; j <= d; ++j) {
    out.cross_terms[0].push_back(
        solver.solve(sum_mpm(sys, out.P_terms[j - 1]), Side::kLeft));
  }
  for (int i = 2; i <= d; ++i) {
    for (int j = 1; i + j <= d + 1; ++j) {
      out.cross_terms[i - 1].push_back(solver.solve(
          sum_ntqn(sys, out.cross_terms[i - 2][j - 1]), Side::kLeft));
    }
  }
  return out;
}

TruncatedReach truncated_reach(const BqoSystem& sys) {
  LyapunovSolver solver(sys.A());
  TruncatedReach out;
  const Matrix f1 = bbt(sys);
  auto p1 = standard(solver, f1, Side::kRight);
  const Matrix ft = sum_npn(sys, p1.x) + f1;
  auto pt = standard(solver, ft, Side::kRight);
  out.P1 = std::move(p1.x);
  out.residual_P1 = p1.residual;
  out.PT = std::move(pt.x);
  out.residual_PT = pt.residual;
  return out;
}

TruncatedObservability truncated_obs_standard(const BqoSystem& sys,
                                              const Matrix& p1,
                                              const Matrix& pt) {
  check_gramian_shape(sys, p1, "P1");
  check_gramian_shape(sys, pt, "PT");
  LyapunovSolver solver(sys.A());
  const Matrix c = ctc(sys);
  TruncatedObservability out;
  auto q1 = standard(solver, c, Side::kLeft);
  auto qhat =
      standard(solver, sum_ntqn(sys, q1.x) + sum_mpm(sys, p1) + c, Side::kLeft);
  auto qt = standard(solver, sum_ntqn(sys, qhat.x) + sum_mpm(sys, pt) + c,
                     Side::kLeft);
  out.steps = {q1.x, qhat.x};
  out.residuals = {q1.residual, qhat.residual, qt.residual};
  out.Q = std::move(qt.x);
  return out;
}

TruncatedObservability truncated_obs_padhi(const BqoSystem& sys,
                                           const Matrix& pt) {
  check_gramian_shape(sys, pt, "PT");
  LyapunovSolver solver(sys.A());
  const Matrix base = sum_mpm(sys, pt) + ctc(sys);
  TruncatedObservability out;
  auto qhat = standard(solver, base, Side::kLeft);
  auto qt = standard(solver, sum_ntqn(sys, qhat.x) + base, Side::kLeft);
  out.steps = {qhat.x};
  out.residuals = {qhat.residual, qt.residual};
  out.Q = std::move(qt.x);
  return out;
}

TruncatedObservability truncated_obs_alternative(const BqoSystem& sys,
                                                 const Matrix& pt) {
  check_gramian_shape(sys, pt, "PT");
  LyapunovSolver solver(sys.A());
  auto qa = standard(solver, sum_mpm(sys, pt) + ctc(sys), Side::kLeft);
  TruncatedObservability out;
  out.residuals = {qa.residual};
  out.Q = std::move(qa.x);
  return out;
}

GramianSet compute_gramians(const BqoSystem& sys, GramianVariant variant,
                            const GramianOptions& opts) {
  GramianSet g;
  g.variant = variant;

  const auto cert = existence_margins(sys);
  if (!cert.exists_P) {
    g.warnings.push_back(
        "existence margin for P not met (Gamma_P >= 2 alpha / beta^2); "
        "proceeding");
  }

  auto full_reach = [&] {
    auto sol = reach_gramian(sys, opts.solver);
    g.residuals["P"] = sol.relative_residual;
    g.iterations["P"] = sol.iterations;
    if (!sol.converged) {
      g.warnings.push_back("P iteration stagnated above residual tolerance");
    }
    g.P = std::move(sol.X);
  };
  auto truncated = [&] {
    auto tr = truncated_reach(sys);
    g.residuals["P1"] = tr.residual_P1;
    g.residuals["P"] = tr.residual_PT;
    g.iterations["P"] = 1;
    g.intermediates["P1"] = tr.P1;
    g.P = std::move(tr.PT);
  };

  switch (variant) {
    case GramianVariant::kStandard:
    case GramianVariant::kMixed: {
      if (!cert.exists_QS) {
        g.warnings.push_back(
            "existence margin for Q^S not met (Gamma_QS >= 2 alpha / beta^2); "
            "proceeding");
      }
      full_reach();
      LyapunovSolution sol;
      if (variant == GramianVariant::kMixed) {
        g.phi = opts.phi;
        sol = obs_gramian_mixed(sys, g.P, opts.phi, opts.solver);
      } else {
        sol = obs_gramian_standard(sys, g.P, opts.solver);
      }
      g.residuals["Q"] = sol.relative_residual;
      g.iterations["Q"] = sol.iterations;
      if (!sol.converged) {
        g.warnings.push_back("Q iteration stagnated above residual tolerance");
      }
      g.Q = std::move(sol.X);
      break;
    }
    case GramianVariant::kPadhi: {
      full_reach();
      const auto terms = series_terms(sys, opts.series_depth);
      g.Q = symmetrized(terms.padhi_partial_sum(terms.depth));
      g.residuals["Q"] =
          residual_norm(sys.A(), sys.N(), sum_mpm(sys, g.P) + ctc(sys), g.Q,
                        Side::kLeft);
      g.iterations["Q"] = terms.depth;
      break;
    }
    case GramianVariant::kAlternative: {
      if (!cert.exists_QA) {
        g.warnings.push_back(
            "existence margin for Q^A not met (Gamma_QA >= 2 alpha / beta^2); "
            "proceeding");
      }
      full_reach();
      auto sol = obs_gramian_alternative(sys, g.P);
      g.residuals["Q"] = sol.relative_residual;
      g.iterations["Q"] = 1;
      g.Q = std::move(sol.X);
      break;
    }
    case GramianVariant::kTruncatedStandard: {
      truncated();
      auto t = truncated_obs_standard(sys, g.intermediates["P1"], g.P);
      g.intermediates["Q1"] = t.steps[0];
      g.intermediates["Qhat"] = t.steps[1];
      g.residuals["Q1"] = t.residuals[0];
      g.residuals["Qhat"] = t.residuals[1];
      g.residuals["Q"] = t.residuals[2];
      g.iterations["Q"] = 1;
      g.Q = std::move(t.Q);
      break;
    }
    case GramianVariant::kTruncatedPadhi: {
      truncated();
      auto t = truncated_obs_padhi(sys, g.P);
      g.intermediates["Qhat"] = t.steps[0];
      g.residuals["Qhat"] = t.residuals[0];
      g.residuals["Q"] = t.residuals[1];
      g.iterations["Q"] = 1;
      g.Q = std::move(t.Q);
      break;
    }
    case GramianVariant::kTruncatedAlternative: {
      truncated();
      auto t = truncated_obs_alternative(sys, g.P);
      g.residuals["Q"] = t.residuals[0];
      g.iterations["Q"] = 1;
      g.Q = std::move(t.Q);
      break;
    }
    case GramianVariant::kReach:
      full_reach();
      break;
    case GramianVariant::kTruncatedReach:
      truncated();
      break;
  }

  require_psd(g.P, "P");
  if (g.Q.size() > 0) require_psd(g.Q, "Q");
  return g;
}

Matrix numerical_kernel(const Matrix& gramian, double rel_tol) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrized(gramian));
  const Vector& ev = es.eigenvalues();
  const double lmax = std::max(ev.maxCoeff(), 0.0);
  std::vector<Eigen::Index> cols;
  for (Eigen::Index i = 0; i < ev.size(); ++i)
    if (ev(i) <= rel_tol * lmax) cols.push_back(i);
  Matrix basis(gramian.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c)
    basis.col(static_cast<Eigen::Index>(c)) = es.eigenvectors().col(cols[c]);
  return basis;
}

}  // namespace bqo
