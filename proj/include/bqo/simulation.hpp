#pragma once

#include <functional>
#include <string>
#include <vector>

#include "bqo/linalg.hpp"
#include "bqo/system.hpp"

namespace bqo {

/// Input signal u(t) in R^m.
using InputFunction = std::function<Vector(double)>;

/// u_k(t) = e^{-t} for every input.
InputFunction exp_input(Eigen::Index m);
/// u_j(t) = cos(j pi t), j = 1..m.
InputFunction cos_input(Eigen::Index m);
/// u_k(t) = 0.
InputFunction zero_input(Eigen::Index m);
/// Piecewise-linear interpolation of a table with columns (t, u_1, .., u_m).
/// Values outside the table are held constant. Throws kBadSpec on a table
/// with fewer than two rows or non-increasing times.
InputFunction table_input(const Matrix& table);

/// Sampled trajectory; column i of `states` / `outputs` belongs to times[i].
struct Trajectory {
  std::vector<double> times;
  Matrix states;   // n x (steps + 1)
  Matrix outputs;  // p x (steps + 1)
};

struct SimulationOptions {
  /// RK4 steps per output interval. 0 picks the smallest count keeping
  /// h * (||A||_inf + sum_k ||N_k||_inf max|u_k|) <= 2.5 so the explicit
  /// scheme stays inside its stability region.
  int substeps = 0;
  /// Divergence guard on ||x||.
  double overflow_threshold = 1e12;
};

/// Outputs y_j = (C x)_j + x^T M_j x.
Vector evaluate_output(const BqoSystem& sys, const Vector& x);

/// Fixed-step classical RK4 on x' = A x + sum_k N_k x u_k + B u from x(0) = 0,
/// sampled on the equidistant grid t_i = i t_end / steps, i = 0..steps.
/// The realization is integrated as given (scaled matrices if an input
/// scaling is attached). Throws kNonFiniteState if the state diverges.
Trajectory simulate(const BqoSystem& sys, const InputFunction& u, double t_end,
                    int steps, const SimulationOptions& opts = {});

/// Same as simulate but from x(0) = x0 and, when `homogeneous` is set, with
/// the B u term dropped.
Trajectory simulate_from(const BqoSystem& sys, const InputFunction& u,
                         const Vector& x0, bool homogeneous, double t_end,
                         int steps, const SimulationOptions& opts = {});

struct ErrorReport {
  std::vector<double> pointwise_rel;  // ||y(t_i) - yhat(t_i)|| / max_i ||y||
  double frobenius_rel = 0.0;         // ||Y - Yhat||_F / ||Y||_F
};

/// Throws kGridMismatch unless both trajectories share the same time grid
/// and output dimension.
ErrorReport error_metrics(const Trajectory& full, const Trajectory& reduced);

/// sup_t ||y(t)|| of the homogeneous dynamics started at x0. `q` is the
/// Gramian whose kernel x0 is supposed to lie in; throws kNotInKernel when
/// ||Q x0|| > 1e-8 ||Q|| ||x0||.
double unobservability_probe(const BqoSystem& sys, const Matrix& q,
                             const Vector& x0, const InputFunction& u,
                             double t_end, int steps);

}  // namespace bqo
