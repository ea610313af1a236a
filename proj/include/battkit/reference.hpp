#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

#include "battkit/diffusion.hpp"
#include "battkit/params.hpp"

namespace battkit {

/// What to record while solving the fine-grid oracle.
struct ReferenceRequest {
  int n_ref = 400;
  double horizon = 0.0;          // [s]
  double dt = 0.0;               // [s]; 0 picks tau/2000
  int sample_stride = 1;         // record every k-th step
  Eigen::VectorXd query_radii;   // point-value traces at these radii
  bool store_field = false;      // keep full field snapshots
};

/// Method-of-lines solution of the radial diffusion equation on a fine
/// uniform-volume grid, integrated with an unconditionally stable implicit
/// scheme. Point values are read off against the L2 volume-mean radius of
/// each shell (exact for the steady quadratic profile) and the surface value
/// is anchored through the flux boundary condition, which removes most of
/// the first-order bias of raw cell values.
class ReferenceSolution {
public:
  const RadialGrid& grid() const { return grid_; }
  const std::vector<double>& times() const { return times_; }
  const std::vector<double>& surface() const { return surface_; }
  const std::vector<double>& mean() const { return mean_; }
  /// (n_times x n_query) traces at the requested radii.
  const Eigen::MatrixXd& at_radii() const { return at_radii_; }
  const Eigen::VectorXd& query_radii() const { return query_radii_; }

  double final_time() const { return final_time_; }
  const Eigen::VectorXd& final_state() const { return final_state_; }
  double final_mean() const { return mean_.back(); }
  double final_surface() const { return surface_.back(); }

  /// Point value of the final profile at radius r (interpolated).
  double evaluate_final(double r) const;

  /// Lithium flux density between shells of the final profile; row i holds
  /// (interface radius r_i, -D dc/dr). The center flux is zero by
  /// construction of the scheme.
  Eigen::MatrixXd final_flux_density() const;

  /// Writes (t, r, c) triples for every stored snapshot. Requires
  /// store_field; rows carry the shell interpolation abscissae.
  void write_csv(const std::string& path,
                 const std::string& provenance = "") const;

  friend ReferenceSolution solve_reference(
      const ElectrodeParams& electrode,
      const std::function<double(double)>& input_rate, double c0,
      const ReferenceRequest& request);

private:
  RadialGrid grid_;
  Eigen::VectorXd rho_;  // interpolation abscissae per shell
  double diffusivity_ = 0.0;
  std::vector<double> times_, surface_, mean_, m_samples_;
  Eigen::MatrixXd at_radii_;
  Eigen::VectorXd query_radii_;
  Eigen::MatrixXd field_;  // optional snapshots (rows = times)
  bool has_field_ = false;
  Eigen::VectorXd final_state_;
  double final_time_ = 0.0;
  double final_m_ = 0.0;

  double point_value(const Eigen::VectorXd& c, double m_now, double r) const;
};

/// Solves the oracle for one electrode. The input rate is the volumetric
/// source m(t) = -j_Li/(eps F) [mol/(m^3 s)]; positive input fills the
/// particle through the surface flux boundary condition.
ReferenceSolution solve_reference(
    const ElectrodeParams& electrode,
    const std::function<double(double)>& input_rate, double c0,
    const ReferenceRequest& request);

/// Steady profile c_mean_inf + k(r) m of the step response.
double steady_profile(double c_mean_inf, double input_rate, double tau,
                      double particle_radius, double r);

}  // namespace battkit
