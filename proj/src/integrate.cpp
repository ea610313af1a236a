#include "battkit/integrate.hpp"

#include <cmath>

namespace battkit {

TimeGrid make_time_grid(double horizon, double dt_max) {
  if (!(horizon > 0.0) || !(dt_max > 0.0)) {
    throw InputError("time grid needs positive horizon and step");
  }
  TimeGrid g;
  g.steps = static_cast<long>(std::ceil(horizon / dt_max - 1e-9));
  if (g.steps < 1) g.steps = 1;
  g.dt = horizon / static_cast<double>(g.steps);
  return g;
}

Eigen::VectorXd integrate_rk4(
    const StateFn& rhs, Eigen::VectorXd state, const TimeGrid& grid,
    const std::function<void(long, double, const Eigen::VectorXd&)>&
        observer) {
  const double h = grid.dt;
  for (long k = 0; k < grid.steps; ++k) {
    const double t = grid.at(k);
    const Eigen::VectorXd k1 = rhs(t, state);
    const Eigen::VectorXd k2 = rhs(t + h / 2, state + (h / 2) * k1);
    const Eigen::VectorXd k3 = rhs(t + h / 2, state + (h / 2) * k2);
    const Eigen::VectorXd k4 = rhs(t + h, state + h * k3);
    state += (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4);
    if (!state.allFinite()) {
      throw IntegrationFailure("rk4 state became non-finite", k);
    }
    if (observer) observer(k + 1, grid.at(k + 1), state);
  }
  return state;
}

Eigen::VectorXd integrate_implicit_linear(
    const Eigen::MatrixXd& M,
    const std::function<Eigen::VectorXd(double)>& forcing,
    Eigen::VectorXd state, const TimeGrid& grid,
    const std::function<void(long, double, const Eigen::VectorXd&)>&
        observer) {
  const Eigen::Index n = M.rows();
  const double h = grid.dt;
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu_cn(I - (h / 2) * M);
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu_be(I - (h / 2) * M);  // BE at h/2
  double t = grid.t0;
  for (long k = 0; k < grid.steps; ++k) {
    if (k < 2) {
      // two backward-Euler half-steps
      for (int sub = 0; sub < 2; ++sub) {
        state = lu_be.solve(state + (h / 2) * forcing(t + h / 2));
        t += h / 2;
      }
    } else {
      state = lu_cn.solve(state + (h / 2) * (M * state) + h * forcing(t + h / 2));
      t += h;
    }
    if (!state.allFinite()) {
      throw IntegrationFailure("implicit step became non-finite", k);
    }
    if (observer) observer(k + 1, t, state);
  }
  return state;
}

TridiagonalCrankNicolson::TridiagonalCrankNicolson(Eigen::VectorXd lower,
                                                   Eigen::VectorXd diag,
                                                   Eigen::VectorXd upper,
                                                   Eigen::VectorXd b)
    : lo_(std::move(lower)),
      di_(std::move(diag)),
      up_(std::move(upper)),
      b_(std::move(b)) {
  const Eigen::Index n = di_.size();
  if (lo_.size() != n || up_.size() != n || b_.size() != n || n < 1) {
    throw AssemblyError("tridiagonal system: inconsistent diagonal sizes");
  }
}

Eigen::VectorXd TridiagonalCrankNicolson::apply(
    const Eigen::VectorXd& x) const {
  const Eigen::Index n = di_.size();
  Eigen::VectorXd y = di_.cwiseProduct(x);
  y.tail(n - 1) += lo_.tail(n - 1).cwiseProduct(x.head(n - 1));
  y.head(n - 1) += up_.head(n - 1).cwiseProduct(x.tail(n - 1));
  return y;
}

void TridiagonalCrankNicolson::thomas_solve(double h,
                                            Eigen::VectorXd& rhs) const {
  // solves (I - h M) x = rhs in place
  const Eigen::Index n = di_.size();
  Eigen::VectorXd cp(n);
  double piv = 1.0 - h * di_[0];
  rhs[0] /= piv;
  if (n > 1) cp[0] = (-h * up_[0]) / piv;
  for (Eigen::Index i = 1; i < n; ++i) {
    const double a = -h * lo_[i];
    piv = (1.0 - h * di_[i]) - a * cp[i - 1];
    if (i + 1 < n) cp[i] = (-h * up_[i]) / piv;
    rhs[i] = (rhs[i] - a * rhs[i - 1]) / piv;
  }
  for (Eigen::Index i = n - 2; i >= 0; --i) {
    rhs[i] -= cp[i] * rhs[i + 1];
  }
}

void TridiagonalCrankNicolson::run(
    Eigen::VectorXd& state, const TimeGrid& grid,
    const std::function<double(double)>& u,
    const std::function<void(long, double, const Eigen::VectorXd&)>&
        observer) {
  const double h = grid.dt;
  double t = grid.t0;
  for (long k = 0; k < grid.steps; ++k) {
    if (k < 2) {
      for (int sub = 0; sub < 2; ++sub) {
        Eigen::VectorXd rhs = state + (h / 2) * b_ * u(t + h / 2);
        thomas_solve(h / 2, rhs);
        state = rhs;
        t += h / 2;
      }
    } else {
      Eigen::VectorXd rhs =
          state + (h / 2) * apply(state) + h * b_ * u(t + h / 2);
      thomas_solve(h / 2, rhs);
      state = rhs;
      t += h;
    }
    if (!state.allFinite()) {
      throw IntegrationFailure("diffusion oracle step became non-finite", k);
    }
    if (observer) observer(k + 1, t, state);
  }
}

}  // namespace battkit
