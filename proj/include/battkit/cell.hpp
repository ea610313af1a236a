#pragma once

#include <Eigen/Dense>
#include <utility>

#include "battkit/diffusion.hpp"
#include "battkit/ocv.hpp"
#include "battkit/params.hpp"

namespace battkit {

enum class Side { Neg, Pos };

/// Volumetric source rate for one electrode at cell current I (generator
/// convention, I > 0 in discharge): the negative electrode depletes and the
/// positive electrode fills on discharge.
double m_from_current(double current, Side side, const CellParams& params);

/// One electrode with its grid, diffusion system, correction coefficients
/// and OCV curve.
struct ElectrodeBlock {
  ElectrodeParams params;
  RadialGrid grid;
  DiffusionSystem sys;
  Eigen::VectorXd correction;  // K^s
  OcvCurve ocv;
  double alpha = 0.0;  // F/3600 * eps A d / V_s  [Ah per (mol/m^3 * m^3)]
};

/// Reduced full-cell model
///   xdot = A x + B u + K,  y = h(x) + g(u),
/// with x = (c_neg_2..c_neg_Nn, c_pos_1..c_pos_Np) after eliminating the
/// negative-electrode center concentration through lithium conservation.
/// Both the corrected and the plain surface-based output maps are kept.
class CellModel {
public:
  Eigen::Index state_dim() const { return A_.rows(); }
  const Eigen::MatrixXd& A() const { return A_; }
  const Eigen::VectorXd& B() const { return B_; }
  const Eigen::VectorXd& K() const { return K_; }

  const ElectrodeBlock& block(Side s) const {
    return s == Side::Pos ? pos_ : neg_;
  }
  const CellParams& params() const { return params_; }
  double lithium_quantity() const { return Q_; }  // Ah
  double reduction_constant() const { return Kbar_; }

  const Eigen::RowVectorXd& H_pos_cor() const { return H_pos_cor_; }
  const Eigen::RowVectorXd& H_neg_cor() const { return H_neg_cor_; }
  const Eigen::RowVectorXd& H_pos() const { return H_pos_; }
  const Eigen::RowVectorXd& H_neg() const { return H_neg_; }
  double K1() const { return K1_; }
  /// Mean-concentration weights entering the corrected output rows.
  const Eigen::VectorXd& hbar_pos() const { return hbar_pos_; }
  const Eigen::VectorXd& hstar() const { return hstar_; }
  double hbar_neg_center() const { return hbar_neg1_; }

  /// Center concentration of the negative electrode recovered from the
  /// reduced state through lithium conservation.
  double recover_center(const Eigen::VectorXd& x) const;

  /// Full per-electrode concentration vectors (negative one includes the
  /// recovered center sample).
  std::pair<Eigen::VectorXd, Eigen::VectorXd> full_concentrations(
      const Eigen::VectorXd& x) const;

  /// Lithium inventory recomputed from a reduced state [Ah]; constant along
  /// trajectories by construction.
  double lithium_quantity_of(const Eigen::VectorXd& x) const;

  /// Electrode overpotential stack g(u): reaction (arcsinh) terms plus the
  /// ohmic electrode and separator drops, odd in u.
  double overpotentials(double u) const;

  /// Corrected / uncorrected surface stoichiometries from the reduced state.
  double zeta_pos_cor(const Eigen::VectorXd& x) const {
    return H_pos_cor_ * x;
  }
  double zeta_neg_cor(const Eigen::VectorXd& x) const {
    return H_neg_cor_ * x + K1_;
  }

  double h_cor(const Eigen::VectorXd& x) const;
  double h_uncorrected(const Eigen::VectorXd& x) const;
  double output_voltage(const Eigen::VectorXd& x, double u,
                        bool corrected) const;

  struct SocReading {
    double pos = 0.0;                 // percent
    double neg = 0.0;                 // percent
    bool consistent = true;           // |pos - neg| <= 0.5
    double value() const { return pos; }
  };
  SocReading soc(const Eigen::VectorXd& x) const;
  double soc_from_mean(double mean, Side side) const;

  /// Uniform equilibrium state at the given SOC (percent).
  Eigen::VectorXd equilibrium_state(double soc_percent) const;

  /// Corrected concentration vectors for both electrodes from a reduced
  /// state (recovers the center sample first).
  std::pair<Eigen::VectorXd, Eigen::VectorXd> corrected_concentrations(
      const Eigen::VectorXd& x) const;

  friend CellModel assemble_cell(ElectrodeBlock neg, ElectrodeBlock pos,
                                 double lithium_quantity_Ah,
                                 const CellParams& params);

private:
  ElectrodeBlock neg_, pos_;
  CellParams params_;
  double Q_ = 0.0;
  double Kbar_ = 0.0;
  Eigen::MatrixXd A_;
  Eigen::VectorXd B_, K_;
  Eigen::RowVectorXd H_pos_cor_, H_neg_cor_, H_pos_, H_neg_;
  Eigen::VectorXd hbar_pos_, hstar_;
  double hbar_neg1_ = 0.0;
  double K1_ = 0.0;
};

/// Builds an electrode block from parameters (grid, system, corrections).
ElectrodeBlock make_electrode_block(const ElectrodeParams& ep, int samples,
                                    GridScheme scheme, OcvCurve ocv,
                                    const CellParams& cell);

/// Assembles the reduced model. The center sample of the negative electrode
/// is substituted out exactly, so the reduced trajectory reproduces the two
/// unreduced particle systems for any grid scheme.
CellModel assemble_cell(ElectrodeBlock neg, ElectrodeBlock pos,
                        double lithium_quantity_Ah, const CellParams& params);

/// Lithium inventory [Ah] of the uniform equilibrium state at `soc_percent`,
/// used to seed a model consistent with its initial condition.
double lithium_at_equilibrium(const ElectrodeBlock& neg,
                              const ElectrodeBlock& pos, double soc_percent);

}  // namespace battkit
