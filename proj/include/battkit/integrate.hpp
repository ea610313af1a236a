#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "battkit/errors.hpp"

namespace battkit {

using StateFn =
    std::function<Eigen::VectorXd(double /*t*/, const Eigen::VectorXd&)>;

/// Uniform time grid [t0, t0 + n*dt].
struct TimeGrid {
  double t0 = 0.0;
  double dt = 0.0;
  long steps = 0;

  double t_end() const { return t0 + dt * static_cast<double>(steps); }
  double at(long k) const { return t0 + dt * static_cast<double>(k); }
};

/// Builds a grid covering [0, horizon] with a step no larger than dt_max
/// (the step is shrunk so the horizon divides evenly).
TimeGrid make_time_grid(double horizon, double dt_max);

/// Classic fixed-step RK4. `observer` (optional) is called after every step
/// with (step index, time, state). Throws IntegrationFailure on non-finite
/// state, naming the step.
Eigen::VectorXd integrate_rk4(
    const StateFn& rhs, Eigen::VectorXd state, const TimeGrid& grid,
    const std::function<void(long, double, const Eigen::VectorXd&)>& observer =
        {});

/// Implicit trapezoidal stepping for the affine system xdot = M x + f(t),
/// with a short backward-Euler start to damp nonsmooth initial layers.
/// Unconditionally stable; M is factored once.
Eigen::VectorXd integrate_implicit_linear(
    const Eigen::MatrixXd& M,
    const std::function<Eigen::VectorXd(double)>& forcing,
    Eigen::VectorXd state, const TimeGrid& grid,
    const std::function<void(long, double, const Eigen::VectorXd&)>& observer =
        {});

/// Tridiagonal Crank-Nicolson engine for large stiff diffusion systems:
/// same scheme as integrate_implicit_linear but with O(N) Thomas solves.
class TridiagonalCrankNicolson {
public:
  /// `lower`, `diag`, `upper` are the three diagonals of M (lower[0] and
  /// upper[n-1] unused); `b` is the constant input column of xdot = M x + b u.
  TridiagonalCrankNicolson(Eigen::VectorXd lower, Eigen::VectorXd diag,
                           Eigen::VectorXd upper, Eigen::VectorXd b);

  /// Advances `state` in place over `grid` driving the input with u(t)
  /// (evaluated at midpoints); the first 4 steps use two backward-Euler
  /// half-steps each. Calls `observer(step, t, state)` after every step.
  void run(Eigen::VectorXd& state, const TimeGrid& grid,
           const std::function<double(double)>& u,
           const std::function<void(long, double, const Eigen::VectorXd&)>&
               observer = {});

private:
  Eigen::VectorXd lo_, di_, up_, b_;
  void thomas_solve(double h, Eigen::VectorXd& rhs) const;
  Eigen::VectorXd apply(const Eigen::VectorXd& x) const;
};

}  // namespace battkit
