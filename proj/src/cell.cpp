#include "battkit/cell.hpp"

#include <cmath>

namespace battkit {

double m_from_current(double current, Side side, const CellParams& params) {
  const ElectrodeParams& ep = side == Side::Pos ? params.pos : params.neg;
  const double denom = ep.volume_fraction * params.cell_area * ep.thickness *
                       params.faraday;
  return side == Side::Pos ? current / denom : -current / denom;
}

ElectrodeBlock make_electrode_block(const ElectrodeParams& ep, int samples,
                                    GridScheme scheme, OcvCurve ocv,
                                    const CellParams& cell) {
  ElectrodeBlock b;
  b.params = ep;
  b.grid = build_radial_grid(samples, ep.particle_radius, scheme);
  b.sys = build_diffusion_system(b.grid, ep.diffusivity);
  b.correction = correction_coefficients(b.sys, b.grid);
  b.ocv = std::move(ocv);
  b.alpha = cell.faraday / 3600.0 * ep.volume_fraction * cell.cell_area *
            ep.thickness / b.grid.particle_volume;
  return b;
}

CellModel assemble_cell(ElectrodeBlock neg, ElectrodeBlock pos,
                        double lithium_quantity_Ah, const CellParams& params) {
  const Eigen::Index nn = neg.grid.sample_count();
  const Eigen::Index np = pos.grid.sample_count();
  if (nn < 2) {
    throw AssemblyError(
        "negative electrode needs at least 2 samples for the reduction");
  }
  if (np < 1) throw AssemblyError("positive electrode needs samples");

  CellModel m;
  m.neg_ = std::move(neg);
  m.pos_ = std::move(pos);
  m.params_ = params;
  m.Q_ = lithium_quantity_Ah;

  const auto& Vn = m.neg_.grid.shell_volumes;
  const auto& Vp = m.pos_.grid.shell_volumes;
  const double alpha_ratio = m.pos_.alpha / m.neg_.alpha;
  m.Kbar_ = m.Q_ / (m.neg_.alpha * Vn[0]);

  const Eigen::Index N = nn - 1 + np;
  m.A_ = Eigen::MatrixXd::Zero(N, N);
  m.B_ = Eigen::VectorXd::Zero(N);
  m.K_ = Eigen::VectorXd::Zero(N);

  const Eigen::MatrixXd& An = m.neg_.sys.A;
  const Eigen::MatrixXd& Ap = m.pos_.sys.A;

  // Negative rows with the center sample substituted out through the
  // lithium-conservation identity; only the c_neg_2 row actually couples.
  for (Eigen::Index i = 1; i < nn; ++i) {
    const Eigen::Index row = i - 1;
    for (Eigen::Index j = 1; j < nn; ++j) m.A_(row, j - 1) = An(i, j);
    const double coup = An(i, 0);
    if (coup != 0.0) {
      m.K_[row] += coup * m.Kbar_;
      for (Eigen::Index j = 1; j < nn; ++j) {
        m.A_(row, j - 1) -= coup * Vn[j] / Vn[0];
      }
      for (Eigen::Index j = 0; j < np; ++j) {
        m.A_(row, nn - 1 + j) -= coup * alpha_ratio * Vp[j] / Vn[0];
      }
    }
  }
  for (Eigen::Index i = 0; i < np; ++i) {
    for (Eigen::Index j = 0; j < np; ++j) {
      m.A_(nn - 1 + i, nn - 1 + j) = Ap(i, j);
    }
  }

  const double KI_neg = m.neg_.grid.particle_volume /
                        (Vn[nn - 1] * m.neg_.params.volume_fraction *
                         params.faraday * params.cell_area *
                         m.neg_.params.thickness);
  const double KI_pos = m.pos_.grid.particle_volume /
                        (Vp[np - 1] * m.pos_.params.volume_fraction *
                         params.faraday * params.cell_area *
                         m.pos_.params.thickness);
  m.B_[nn - 2] = -KI_neg;
  m.B_[N - 1] = KI_pos;

  // Output rows.
  const double Kp_surf = m.pos_.correction[np - 1];
  const double Kn_surf = m.neg_.correction[nn - 1];
  m.hbar_pos_ =
      Vp * (1.0 - Kp_surf) / (m.pos_.grid.particle_volume * m.pos_.params.c_max);
  m.hstar_ = Vp * (1.0 - Kn_surf) * alpha_ratio /
             (m.neg_.grid.particle_volume * m.neg_.params.c_max);
  m.hbar_neg1_ = Vn[0] * (1.0 - Kn_surf) /
                 (m.neg_.grid.particle_volume * m.neg_.params.c_max);

  m.H_pos_cor_ = Eigen::RowVectorXd::Zero(N);
  m.H_pos_cor_.segment(nn - 1, np) = m.hbar_pos_.transpose();
  m.H_pos_cor_(N - 1) += Kp_surf / m.pos_.params.c_max;

  m.H_neg_cor_ = Eigen::RowVectorXd::Zero(N);
  m.H_neg_cor_(nn - 2) = Kn_surf / m.neg_.params.c_max;
  m.H_neg_cor_.segment(nn - 1, np) = -m.hstar_.transpose();
  m.K1_ = m.hbar_neg1_ * m.Kbar_;

  m.H_pos_ = Eigen::RowVectorXd::Zero(N);
  m.H_pos_(N - 1) = 1.0 / m.pos_.params.c_max;
  m.H_neg_ = Eigen::RowVectorXd::Zero(N);
  m.H_neg_(nn - 2) = 1.0 / m.neg_.params.c_max;
  return m;
}

double CellModel::recover_center(const Eigen::VectorXd& x) const {
  const Eigen::Index nn = neg_.grid.sample_count();
  const Eigen::Index np = pos_.grid.sample_count();
  const auto& Vn = neg_.grid.shell_volumes;
  const auto& Vp = pos_.grid.shell_volumes;
  double c1 = Kbar_;
  c1 -= Vn.tail(nn - 1).dot(x.head(nn - 1)) / Vn[0];
  c1 -= pos_.alpha / (neg_.alpha * Vn[0]) * Vp.dot(x.tail(np));
  return c1;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> CellModel::full_concentrations(
    const Eigen::VectorXd& x) const {
  const Eigen::Index nn = neg_.grid.sample_count();
  const Eigen::Index np = pos_.grid.sample_count();
  Eigen::VectorXd cn(nn), cp(np);
  cn[0] = recover_center(x);
  cn.tail(nn - 1) = x.head(nn - 1);
  cp = x.tail(np);
  return {cn, cp};
}

double CellModel::lithium_quantity_of(const Eigen::VectorXd& x) const {
  const auto [cn, cp] = full_concentrations(x);
  return neg_.alpha * neg_.grid.shell_volumes.dot(cn) +
         pos_.alpha * pos_.grid.shell_volumes.dot(cp);
}

double CellModel::overpotentials(double u) const {
  double total = 0.0;
  for (const ElectrodeBlock* b : {&pos_, &neg_}) {
    const ElectrodeParams& ep = b->params;
    const double eta_reaction =
        2.0 * params_.gas_constant * params_.temperature / params_.faraday *
        std::asinh(ep.particle_radius * u /
                   (6.0 * ep.exchange_current * ep.volume_fraction *
                    params_.cell_area * ep.thickness));
    const double sigma_eff = ep.conductivity * ep.volume_fraction;
    const double kappa =
        params_.ionic_conductivity * std::pow(ep.electrolyte_fraction, 1.5);
    const double eta_ohmic = 1.0 / (2.0 * params_.cell_area) *
                             (ep.thickness / sigma_eff + ep.thickness / kappa) *
                             u;
    total += eta_reaction + eta_ohmic;
  }
  const double kappa_sep =
      params_.ionic_conductivity *
      std::pow(params_.sep_electrolyte_fraction, 1.5);
  total += 1.0 / params_.cell_area * (params_.sep_thickness / kappa_sep) * u;
  return -total;
}

double CellModel::h_cor(const Eigen::VectorXd& x) const {
  return pos_.ocv(zeta_pos_cor(x)) - neg_.ocv(zeta_neg_cor(x));
}

double CellModel::h_uncorrected(const Eigen::VectorXd& x) const {
  return pos_.ocv(H_pos_ * x) - neg_.ocv(H_neg_ * x);
}

double CellModel::output_voltage(const Eigen::VectorXd& x, double u,
                                 bool corrected) const {
  return (corrected ? h_cor(x) : h_uncorrected(x)) + overpotentials(u);
}

double CellModel::soc_from_mean(double mean, Side side) const {
  const ElectrodeParams& ep = side == Side::Pos ? pos_.params : neg_.params;
  return 100.0 * (mean - ep.c_soc0) / (ep.c_soc100 - ep.c_soc0);
}

CellModel::SocReading CellModel::soc(const Eigen::VectorXd& x) const {
  const auto [cn, cp] = full_concentrations(x);
  SocReading r;
  r.neg = soc_from_mean(neg_.grid.volume_mean(cn), Side::Neg);
  r.pos = soc_from_mean(pos_.grid.volume_mean(cp), Side::Pos);
  r.consistent = std::abs(r.pos - r.neg) <= 0.5;
  return r;
}

Eigen::VectorXd CellModel::equilibrium_state(double soc_percent) const {
  const Eigen::Index nn = neg_.grid.sample_count();
  const Eigen::Index np = pos_.grid.sample_count();
  const double cn = neg_.params.c_soc0 +
                    soc_percent / 100.0 *
                        (neg_.params.c_soc100 - neg_.params.c_soc0);
  const double cp = pos_.params.c_soc0 +
                    soc_percent / 100.0 *
                        (pos_.params.c_soc100 - pos_.params.c_soc0);
  Eigen::VectorXd x(nn - 1 + np);
  x.head(nn - 1).setConstant(cn);
  x.tail(np).setConstant(cp);
  return x;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd>
CellModel::corrected_concentrations(const Eigen::VectorXd& x) const {
  const auto [cn, cp] = full_concentrations(x);
  return {correct_concentrations(cn, neg_.correction, neg_.grid),
          correct_concentrations(cp, pos_.correction, pos_.grid)};
}

double lithium_at_equilibrium(const ElectrodeBlock& neg,
                              const ElectrodeBlock& pos, double soc_percent) {
  const double cn = neg.params.c_soc0 +
                    soc_percent / 100.0 *
                        (neg.params.c_soc100 - neg.params.c_soc0);
  const double cp = pos.params.c_soc0 +
                    soc_percent / 100.0 *
                        (pos.params.c_soc100 - pos.params.c_soc0);
  return neg.alpha * neg.grid.particle_volume * cn +
         pos.alpha * pos.grid.particle_volume * cp;
}

}  // namespace battkit
