#include "bqo/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "bqo/error.hpp"

namespace bqo {
namespace {

constexpr double kStabilityBudget = 2.5;

Vector rhs(const BqoSystem& sys, const Vector& x, const Vector& u,
           bool homogeneous) {
  Vector dx = sys.A() * x;
  for (Eigen::Index k = 0; k < sys.m(); ++k) {
    if (u(k) != 0.0) dx.noalias() += u(k) * (sys.N()[k] * x);
  }
  if (!homogeneous) dx.noalias() += sys.B() * u;
  return dx;
}

Vector checked_input(const InputFunction& u, double t, Eigen::Index m) {
  Vector v = u(t);
  if (v.size() != m) {
    std::ostringstream os;
    os << "input function returned " << v.size() << " entries, expected " << m;
    throw BqoError(ErrorCode::kShapeMismatch, os.str());
  }
  return v;
}

int pick_substeps(const BqoSystem& sys, const InputFunction& u, double dt,
                  int steps) {
  Vector umax = Vector::Zero(sys.m());
  for (int i = 0; i <= 2 * steps; ++i) {
    umax = umax.cwiseMax(checked_input(u, 0.5 * dt * i, sys.m()).cwiseAbs());
  }
  double bound = sys.A().cwiseAbs().rowwise().sum().maxCoeff();
  for (Eigen::Index k = 0; k < sys.m(); ++k) {
    bound += sys.N()[k].cwiseAbs().rowwise().sum().maxCoeff() * umax(k);
  }
  return std::max(1, static_cast<int>(std::ceil(dt * bound / kStabilityBudget)));
}

}  // namespace

InputFunction exp_input(Eigen::Index m) {
  return [m](double t) { return Vector::Constant(m, std::exp(-t)); };
}

InputFunction cos_input(Eigen::Index m) {
  return [m](double t) {
    Vector u(m);
    for (Eigen::Index j = 0; j < m; ++j) {
      u(j) = std::cos(static_cast<double>(j + 1) * std::numbers::pi * t);
    }
    return u;
  };
}

InputFunction zero_input(Eigen::Index m) {
  return [m](double) { return Vector::Zero(m); };
}

InputFunction table_input(const Matrix& table) {
  if (table.rows() < 2 || table.cols() < 2) {
    throw BqoError(ErrorCode::kBadSpec,
                   "input table needs >= 2 rows and a time column plus inputs");
  }
  for (Eigen::Index i = 1; i < table.rows(); ++i) {
    if (!(table(i, 0) > table(i - 1, 0))) {
      throw BqoError(ErrorCode::kBadSpec, "input table times must increase");
    }
  }
  return [table](double t) {
    const Eigen::Index rows = table.rows();
    if (t <= table(0, 0)) return Vector(table.row(0).tail(table.cols() - 1));
    if (t >= table(rows - 1, 0)) {
      return Vector(table.row(rows - 1).tail(table.cols() - 1));
    }
    const auto times = table.col(0);
    const auto it = std::upper_bound(times.begin(), times.end(), t);
    const Eigen::Index hi = it - times.begin();
    const Eigen::Index lo = hi - 1;
    const double w = (t - table(lo, 0)) / (table(hi, 0) - table(lo, 0));
    return Vector((1.0 - w) * table.row(lo).tail(table.cols() - 1) +
                  w * table.row(hi).tail(table.cols() - 1));
  };
}

Vector evaluate_output(const BqoSystem& sys, const Vector& x) {
  Vector y = sys.C() * x;
  for (Eigen::Index j = 0; j < sys.p(); ++j) y(j) += x.dot(sys.M()[j] * x);
  return y;
}

Trajectory simulate(const BqoSystem& sys, const InputFunction& u, double t_end,
                    int steps, const SimulationOptions& opts) {
  return simulate_from(sys, u, Vector::Zero(sys.n()), false, t_end, steps,
                       opts);
}

Trajectory simulate_from(const BqoSystem& sys, const InputFunction& u,
                         const Vector& x0, bool homogeneous, double t_end,
                         int steps, const SimulationOptions& opts) {
  if (steps < 1) throw BqoError(ErrorCode::kBadOption, "steps must be >= 1");
  if (!(t_end > 0.0)) throw BqoError(ErrorCode::kBadOption, "t_end must be > 0");
  if (x0.size() != sys.n()) {
    throw BqoError(ErrorCode::kShapeMismatch, "initial state has wrong size");
  }
  const double dt = t_end / steps;
  const int sub = opts.substeps > 0 ? opts.substeps
                                    : pick_substeps(sys, u, dt, steps);
  const double h = dt / sub;
  const Eigen::Index m = sys.m();

  Trajectory traj;
  traj.times.resize(static_cast<std::size_t>(steps) + 1);
  traj.states.resize(sys.n(), steps + 1);
  traj.outputs.resize(sys.p(), steps + 1);

  Vector x = x0;
  traj.times[0] = 0.0;
  traj.states.col(0) = x;
  traj.outputs.col(0) = evaluate_output(sys, x);
  for (int i = 0; i < steps; ++i) {
    const double t0 = dt * i;
    for (int s = 0; s < sub; ++s) {
      const double t = t0 + h * s;
      const Vector u1 = checked_input(u, t, m);
      const Vector u2 = checked_input(u, t + 0.5 * h, m);
      const Vector u4 = checked_input(u, t + h, m);
      const Vector k1 = rhs(sys, x, u1, homogeneous);
      const Vector k2 = rhs(sys, x + 0.5 * h * k1, u2, homogeneous);
      const Vector k3 = rhs(sys, x + 0.5 * h * k2, u2, homogeneous);
      const Vector k4 = rhs(sys, x + h * k3, u4, homogeneous);
      x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    if (!x.allFinite() || x.norm() > opts.overflow_threshold) {
      std::ostringstream os;
      os << "state diverged at t = " << dt * (i + 1)
         << " (instability or step too large)";
      throw BqoError(ErrorCode::kNonFiniteState, os.str());
    }
    traj.times[static_cast<std::size_t>(i) + 1] = dt * (i + 1);
    traj.states.col(i + 1) = x;
    traj.outputs.col(i + 1) = evaluate_output(sys, x);
  }
  return traj;
}

ErrorReport error_metrics(const Trajectory& full, const Trajectory& reduced) {
  if (full.times != reduced.times ||
      full.outputs.rows() != reduced.outputs.rows() ||
      full.outputs.cols() != reduced.outputs.cols()) {
    throw BqoError(ErrorCode::kGridMismatch,
                   "trajectories must share time grid and output dimension");
  }
  const Matrix diff = full.outputs - reduced.outputs;
  ErrorReport rep;
  const double ymax = full.outputs.colwise().norm().maxCoeff();
  rep.pointwise_rel.reserve(full.times.size());
  for (Eigen::Index i = 0; i < diff.cols(); ++i) {
    const double e = diff.col(i).norm();
    rep.pointwise_rel.push_back(ymax > 0.0 ? e / ymax : e);
  }
  const double yf = full.outputs.norm();
  rep.frobenius_rel = yf > 0.0 ? diff.norm() / yf : diff.norm();
  return rep;
}

double unobservability_probe(const BqoSystem& sys, const Matrix& q,
                             const Vector& x0, const InputFunction& u,
                             double t_end, int steps) {
  if (q.rows() != sys.n() || q.cols() != sys.n()) {
    throw BqoError(ErrorCode::kShapeMismatch, "Gramian has wrong size");
  }
  const double xn = x0.norm();
  if (xn == 0.0) return 0.0;
  if ((q * x0).norm() > 1e-8 * spectral_norm(q) * xn) {
    throw BqoError(ErrorCode::kNotInKernel,
                   "initial state is not in the numerical kernel of Q");
  }
  const auto traj = simulate_from(sys, u, x0, true, t_end, steps);
  return traj.outputs.colwise().norm().maxCoeff();
}

}  // namespace bqo
