#pragma once

#include <Eigen/Dense>
#include <vector>

#include "battkit/errors.hpp"

namespace battkit {

/// Options for the vertex-feasibility program
///   minimize s  s.t.  A'P + PA - W C_i - C_i' W' <= s I  (all vertices),
///                     p_floor I <= P <= p_cap I,  |W| <= gain_ball,
/// solved in scaled coordinates by log-barrier path-following with damped
/// Newton steps. The problem is convex; the path either reaches the margin
/// target or flattens out at the best achievable slack.
struct LmiDesignOptions {
  Eigen::VectorXd state_scale;   ///< diagonal scaling of the state (empty = 1)
  double time_scale = 0.0;       ///< seconds per scaled time unit; 0 = auto
  double p_floor = 5e-3;         ///< lower bound on eig(P) (scaled)
  double p_cap = 1.0;            ///< upper bound on eig(P) (scaled)
  double gain_ball = 2e-2;       ///< bound on |W| (scaled)
  double margin_target = 2.2e-4; ///< stop once s <= -target (scaled)
  double feasibility_tol = 1e-9; ///< infeasible if best s stays above -tol
  int max_outer = 64;
  int max_newton = 100;
};

struct LmiFeasibilityResult {
  Eigen::MatrixXd P;      ///< scaled Lyapunov matrix
  Eigen::VectorXd W;      ///< scaled P*L
  double slack = 0.0;     ///< achieved s (negative = strictly feasible)
  int newton_iterations = 0;
  bool feasible = false;
};

/// Solves the epigraph program above for the given (scaled) A and vertex
/// rows. Throws NumericalFailure only on linear-algebra breakdown; an
/// infeasible problem is reported through `feasible` / `slack`.
LmiFeasibilityResult solve_vertex_feasibility(
    const Eigen::MatrixXd& A_scaled,
    const std::vector<Eigen::RowVectorXd>& C_scaled,
    const LmiDesignOptions& opts);

}  // namespace battkit
