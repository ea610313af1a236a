#pragma once

#include <Eigen/Dense>

#include "battkit/grid.hpp"

namespace battkit {

/// Finite-volume diffusion system for one spherical particle:
///   xdot = A x + B m,   x = sampled concentrations, m = volumetric rate.
///
/// A is tridiagonal with row structure
///   diag(-mu_1, -(mu_i + mu~_i), ..., -mu~_N),  sub = mu~_i,  super = mu_i,
/// where mu_i = S_i / (r_{i+1} - r_i) * D / V_i and
/// mu~_i = S_{i-1} / (r_i - r_{i-1}) * D / V_i. The volume row Gamma kills A
/// (Gamma A = 0) and Gamma B = V, which is what makes the volume-weighted
/// mean follow the input exactly.
struct DiffusionSystem {
  Eigen::MatrixXd A;              // (N x N) rate matrix [1/s]
  Eigen::VectorXd B;              // (N) input column, ends with V/V_N
  Eigen::VectorXd mu;             // mu_i, defined for i = 1..N-1 (index 0..N-2)
  Eigen::VectorXd mu_tilde;       // mu~_i, defined for i = 2..N (index 1..N-1)
  Eigen::MatrixXd A_reduced;      // (N-1 x N-1) mismatch matrix, Hurwitz
  double diffusivity = 0.0;       // D [m^2/s]
  double time_constant = 0.0;     // tau = R^2 / D [s]

  Eigen::Index size() const { return A.rows(); }
};

DiffusionSystem build_diffusion_system(const RadialGrid& grid, double diffusivity);

/// Low-frequency offset k(r) = ((r/R)^2 - 3/5)/6 * tau of the radial transfer
/// function; the steady surface profile is c_mean + k(r) m.
double k_offset(double r, double tau, double particle_radius);

/// Static correction coefficients K_j: K_j = k(r_j) / (A~^{-1} 1)_j for
/// interior samples and K_N = -k(r_N) V_N / (Gamma_red A~^{-1} 1).
/// Computed through an LU solve of A~ y = 1, never an explicit inverse.
Eigen::VectorXd correction_coefficients(const DiffusionSystem& sys,
                                        const RadialGrid& grid);

/// c_cor_j = c_mean - K_j (c_mean - c_j) with c_mean the volume-weighted mean.
Eigen::VectorXd correct_concentrations(const Eigen::VectorXd& concentrations,
                                       const Eigen::VectorXd& coefficients,
                                       const RadialGrid& grid);

double mean_concentration(const Eigen::VectorXd& concentrations,
                          const RadialGrid& grid);

/// Steady state of the mean/sample mismatch x~ = c_mean 1 - x under constant
/// input m: first N-1 entries -A~^{-1} 1 m, last entry balances the volume
/// row so that Gamma x~ = 0.
Eigen::VectorXd steady_mismatch(const DiffusionSystem& sys,
                                const RadialGrid& grid, double input_rate);

struct HurwitzReport {
  bool hurwitz = false;
  double max_real_part = 0.0;  // spectral abscissa
  double margin = 0.0;         // -max_real_part
};

/// True iff all eigenvalues have real part below -1e-12 * ||M||.
HurwitzReport is_hurwitz(const Eigen::MatrixXd& M);

/// Eigenvalues of the tridiagonal sample matrix A via the symmetrizing
/// diagonal similarity (exact real spectrum, robust for large N).
Eigen::VectorXd sample_matrix_eigenvalues(const DiffusionSystem& sys);

/// Count of entries outside [0, c_max]; physical runs warn on nonzero.
int physical_range_violations(const Eigen::VectorXd& concentrations,
                              double c_max);

}  // namespace battkit
