#include "battkit/diffusion.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

namespace battkit {

DiffusionSystem build_diffusion_system(const RadialGrid& grid,
                                       double diffusivity) {
  if (!(diffusivity > 0.0)) {
    throw DomainError("diffusivity must be positive");
  }
  const Eigen::Index n = grid.sample_count();
  const auto& r = grid.outer_radii;
  const auto& V = grid.shell_volumes;
  const auto& S = grid.shell_surfaces;

  DiffusionSystem sys;
  sys.diffusivity = diffusivity;
  sys.time_constant =
      grid.particle_radius * grid.particle_radius / diffusivity;
  sys.mu = Eigen::VectorXd::Zero(n);
  sys.mu_tilde = Eigen::VectorXd::Zero(n);
  for (Eigen::Index i = 0; i + 1 < n; ++i) {
    sys.mu[i] = S[i] / (r[i + 1] - r[i]) * diffusivity / V[i];
  }
  for (Eigen::Index i = 1; i < n; ++i) {
    sys.mu_tilde[i] = S[i - 1] / (r[i] - r[i - 1]) * diffusivity / V[i];
  }

  sys.A = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (i == 0) {
      sys.A(0, 0) = -sys.mu[0];
    } else if (i == n - 1) {
      sys.A(i, i) = -sys.mu_tilde[i];
    } else {
      sys.A(i, i) = -(sys.mu_tilde[i] + sys.mu[i]);
    }
    if (i > 0) sys.A(i, i - 1) = sys.mu_tilde[i];
    if (i + 1 < n) sys.A(i, i + 1) = sys.mu[i];
  }

  sys.B = Eigen::VectorXd::Zero(n);
  sys.B[n - 1] = grid.particle_volume / V[n - 1];

  // (A~)_{ij} = A_{ij} - A_{iN} V_j / V_N: tridiagonal except the row that
  // couples to the surface sample, which picks up the volume closure.
  sys.A_reduced = Eigen::MatrixXd::Zero(n - 1, n - 1);
  for (Eigen::Index i = 0; i + 1 < n; ++i) {
    for (Eigen::Index j = 0; j + 1 < n; ++j) {
      sys.A_reduced(i, j) = sys.A(i, j) - sys.A(i, n - 1) * V[j] / V[n - 1];
    }
  }
  return sys;
}

double k_offset(double r, double tau, double particle_radius) {
  if (r < 0.0 || r > particle_radius * (1.0 + 1e-12)) {
    throw DomainError("k_offset: radius outside [0, R]");
  }
  const double q = r / particle_radius;
  return (q * q - 0.6) / 6.0 * tau;
}

namespace {

Eigen::VectorXd solve_reduced_ones(const DiffusionSystem& sys) {
  const Eigen::Index m = sys.A_reduced.rows();
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(sys.A_reduced);
  const Eigen::VectorXd y = lu.solve(Eigen::VectorXd::Ones(m));
  const double residual =
      (sys.A_reduced * y - Eigen::VectorXd::Ones(m)).norm();
  if (!y.allFinite() || residual > 1e-8 * std::sqrt(double(m))) {
    throw NumericalFailure("reduced mismatch matrix solve failed (residual " +
                           std::to_string(residual) + ")");
  }
  return y;
}

}  // namespace

Eigen::VectorXd correction_coefficients(const DiffusionSystem& sys,
                                        const RadialGrid& grid) {
  const Eigen::Index n = sys.size();
  const Eigen::VectorXd y = solve_reduced_ones(sys);
  const double R = grid.particle_radius;
  const double tau = sys.time_constant;

  Eigen::VectorXd K(n);
  for (Eigen::Index j = 0; j + 1 < n; ++j) {
    K[j] = k_offset(grid.outer_radii[j], tau, R) / y[j];
  }
  const double gamma_y = grid.shell_volumes.head(n - 1).dot(y);
  K[n - 1] = -k_offset(grid.outer_radii[n - 1], tau, R) *
             grid.shell_volumes[n - 1] / gamma_y;
  return K;
}

Eigen::VectorXd correct_concentrations(const Eigen::VectorXd& concentrations,
                                       const Eigen::VectorXd& coefficients,
                                       const RadialGrid& grid) {
  if (concentrations.size() != coefficients.size() ||
      concentrations.size() != grid.sample_count()) {
    throw AssemblyError("correct_concentrations: dimension mismatch");
  }
  const double mean = grid.volume_mean(concentrations);
  return Eigen::VectorXd(mean - coefficients.array() *
                                    (mean - concentrations.array()));
}

double mean_concentration(const Eigen::VectorXd& concentrations,
                          const RadialGrid& grid) {
  if (concentrations.size() != grid.sample_count()) {
    throw AssemblyError("mean_concentration: dimension mismatch");
  }
  return grid.volume_mean(concentrations);
}

Eigen::VectorXd steady_mismatch(const DiffusionSystem& sys,
                                const RadialGrid& grid, double input_rate) {
  const Eigen::Index n = sys.size();
  const Eigen::VectorXd y = solve_reduced_ones(sys);
  Eigen::VectorXd xt(n);
  xt.head(n - 1) = -y * input_rate;
  xt[n - 1] =
      grid.shell_volumes.head(n - 1).dot(y) / grid.shell_volumes[n - 1] *
      input_rate;
  return xt;
}

HurwitzReport is_hurwitz(const Eigen::MatrixXd& M) {
  if (M.rows() != M.cols()) {
    throw AssemblyError("is_hurwitz: matrix must be square");
  }
  Eigen::EigenSolver<Eigen::MatrixXd> es(M, /*computeEigenvectors=*/false);
  if (es.info() != Eigen::Success) {
    throw NumericalFailure("eigensolver did not converge");
  }
  HurwitzReport rep;
  rep.max_real_part = es.eigenvalues().real().maxCoeff();
  rep.margin = -rep.max_real_part;
  const double scale = M.norm();
  rep.hurwitz = rep.max_real_part < -1e-12 * scale;
  return rep;
}

Eigen::VectorXd sample_matrix_eigenvalues(const DiffusionSystem& sys) {
  // d_{i+1} = d_i sqrt(mu_i / mu~_{i+1}) makes D A D^{-1} symmetric; both
  // factors are positive for any valid grid.
  const Eigen::Index n = sys.size();
  Eigen::VectorXd d(n);
  d[0] = 1.0;
  for (Eigen::Index i = 0; i + 1 < n; ++i) {
    d[i + 1] = d[i] * std::sqrt(sys.mu[i] / sys.mu_tilde[i + 1]);
  }
  Eigen::MatrixXd Msym = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    Msym(i, i) = sys.A(i, i);
    if (i + 1 < n) {
      const double off = d[i] * sys.A(i, i + 1) / d[i + 1];
      Msym(i, i + 1) = off;
      Msym(i + 1, i) = off;
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Msym);
  if (es.info() != Eigen::Success) {
    throw NumericalFailure("symmetric eigensolver did not converge");
  }
  return es.eigenvalues();
}

int physical_range_violations(const Eigen::VectorXd& concentrations,
                              double c_max) {
  int count = 0;
  for (Eigen::Index i = 0; i < concentrations.size(); ++i) {
    if (concentrations[i] < 0.0 || concentrations[i] > c_max) ++count;
  }
  return count;
}

}  // namespace battkit
