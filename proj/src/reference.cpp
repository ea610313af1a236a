#include "battkit/reference.hpp"

#include <cmath>
#include <fstream>

#include "battkit/integrate.hpp"

namespace battkit {

namespace {

Eigen::VectorXd shell_mean_radii(const RadialGrid& g) {
  // radius where a quadratic profile equals its shell volume-average:
  // rho_i^2 = (3/5)(r_i^5 - r_{i-1}^5)/(r_i^3 - r_{i-1}^3)
  const Eigen::Index n = g.sample_count();
  Eigen::VectorXd rho(n);
  double prev = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double r = g.outer_radii[i];
    const double num = std::pow(r, 5) - std::pow(prev, 5);
    const double den = std::pow(r, 3) - std::pow(prev, 3);
    rho[i] = std::sqrt(0.6 * num / den);
    prev = r;
  }
  return rho;
}

}  // namespace

double ReferenceSolution::point_value(const Eigen::VectorXd& c, double m_now,
                                      double r) const {
  const double R = grid_.particle_radius;
  if (r < 0.0 || r > R * (1.0 + 1e-12)) {
    throw DomainError("reference evaluation outside [0, R]");
  }
  const Eigen::Index n = c.size();
  const double grad_R = m_now * R / (3.0 * diffusivity_);
  const double c_surf = c[n - 1] + (R - rho_[n - 1]) * grad_R;
  if (r <= rho_[0]) return c[0];
  if (r >= R) return c_surf;
  // binary search over [rho_0..rho_{n-1}, R]
  Eigen::Index lo = 0, hi = n - 1;
  if (r >= rho_[n - 1]) {
    const double w = (r - rho_[n - 1]) / (R - rho_[n - 1]);
    return (1.0 - w) * c[n - 1] + w * c_surf;
  }
  while (hi - lo > 1) {
    const Eigen::Index mid = (lo + hi) / 2;
    (rho_[mid] <= r ? lo : hi) = mid;
  }
  const double w = (r - rho_[lo]) / (rho_[hi] - rho_[lo]);
  return (1.0 - w) * c[lo] + w * c[hi];
}

double ReferenceSolution::evaluate_final(double r) const {
  return point_value(final_state_, final_m_, r);
}

Eigen::MatrixXd ReferenceSolution::final_flux_density() const {
  const Eigen::Index n = final_state_.size();
  Eigen::MatrixXd flux(n - 1, 2);
  for (Eigen::Index i = 0; i + 1 < n; ++i) {
    flux(i, 0) = grid_.outer_radii[i];
    flux(i, 1) = -diffusivity_ * (final_state_[i + 1] - final_state_[i]) /
                 (grid_.outer_radii[i + 1] - grid_.outer_radii[i]);
  }
  return flux;
}

void ReferenceSolution::write_csv(const std::string& path,
                                  const std::string& provenance) const {
  if (!has_field_) {
    throw InputError("reference CSV dump requires store_field");
  }
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path);
  if (!provenance.empty()) out << "# " << provenance << "\n";
  out << "time_s,radius_m,concentration_mol_m3\n";
  out.precision(12);
  for (std::size_t k = 0; k < times_.size(); ++k) {
    for (Eigen::Index i = 0; i < rho_.size(); ++i) {
      out << times_[k] << ',' << rho_[i] << ',' << field_(long(k), i) << "\n";
    }
  }
}

ReferenceSolution solve_reference(
    const ElectrodeParams& electrode,
    const std::function<double(double)>& input_rate, double c0,
    const ReferenceRequest& request) {
  if (request.n_ref < 100) {
    throw InvalidGridError("oracle resolution must be at least 100 shells");
  }
  if (!(c0 >= 0.0)) throw DomainError("initial concentration must be >= 0");
  if (!(request.horizon > 0.0)) throw InputError("horizon must be positive");

  ReferenceSolution sol;
  sol.grid_ = build_radial_grid(request.n_ref, electrode.particle_radius,
                                GridScheme::UniformVolume);
  sol.rho_ = shell_mean_radii(sol.grid_);
  sol.diffusivity_ = electrode.diffusivity;
  const DiffusionSystem sys =
      build_diffusion_system(sol.grid_, electrode.diffusivity);

  const double dt =
      request.dt > 0.0 ? request.dt : electrode.tau() / 2000.0;
  const TimeGrid tg = make_time_grid(request.horizon, dt);

  const Eigen::Index n = request.n_ref;
  Eigen::VectorXd lo = Eigen::VectorXd::Zero(n), di(n),
                  up = Eigen::VectorXd::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i) di[i] = sys.A(i, i);
  for (Eigen::Index i = 1; i < n; ++i) lo[i] = sys.A(i, i - 1);
  for (Eigen::Index i = 0; i + 1 < n; ++i) up[i] = sys.A(i, i + 1);
  TridiagonalCrankNicolson stepper(lo, di, up, sys.B);

  const int stride = std::max(1, request.sample_stride);
  const long n_records = tg.steps / stride + 1 + (tg.steps % stride ? 1 : 0);
  sol.query_radii_ = request.query_radii;
  sol.at_radii_.resize(n_records, request.query_radii.size());
  if (request.store_field) {
    sol.has_field_ = true;
    sol.field_.resize(n_records, n);
  }

  Eigen::VectorXd state = Eigen::VectorXd::Constant(n, c0);
  auto record = [&](double t, const Eigen::VectorXd& c) {
    const double m_now = input_rate(t);
    const long row = static_cast<long>(sol.times_.size());
    sol.times_.push_back(t);
    sol.m_samples_.push_back(m_now);
    sol.mean_.push_back(sol.grid_.volume_mean(c));
    sol.final_state_ = c;  // refreshed every record; last one sticks
    sol.final_time_ = t;
    sol.final_m_ = m_now;
    sol.surface_.push_back(
        sol.point_value(c, m_now, sol.grid_.particle_radius));
    for (Eigen::Index q = 0; q < sol.query_radii_.size(); ++q) {
      sol.at_radii_(row, q) = sol.point_value(c, m_now, sol.query_radii_[q]);
    }
    if (sol.has_field_) sol.field_.row(row) = c.transpose();
  };

  record(0.0, state);
  stepper.run(state, tg, input_rate,
              [&](long k, double t, const Eigen::VectorXd& c) {
                if (k % stride == 0 || k == tg.steps) record(t, c);
              });
  return sol;
}

double steady_profile(double c_mean_inf, double input_rate, double tau,
                      double particle_radius, double r) {
  return c_mean_inf + k_offset(r, tau, particle_radius) * input_rate;
}

}  // namespace battkit
