#pragma once

#include <string>

#include "battkit/errors.hpp"

namespace battkit {

/// Per-electrode material and calibration parameters.
struct ElectrodeParams {
  double particle_radius = 0.0;      // R_s [m]
  double diffusivity = 0.0;          // D_s [m^2/s]
  double volume_fraction = 0.0;      // eps_s, in (0, 1]
  double thickness = 0.0;            // d_s [m]
  double c_max = 0.0;                // [mol/m^3]
  double exchange_current = 0.0;     // j0_s [A/m^2]
  double conductivity = 0.0;         // sigma_s [S/m]
  double electrolyte_fraction = 0.0; // eps_{e,s}
  double c_soc0 = 0.0;               // mean concentration at SOC 0% [mol/m^3]
  double c_soc100 = 0.0;             // mean concentration at SOC 100% [mol/m^3]

  void validate(const std::string& label) const;
  double tau() const { return particle_radius * particle_radius / diffusivity; }
};

/// Full parameter set of the cell (both electrodes, separator, constants).
struct CellParams {
  ElectrodeParams pos;
  ElectrodeParams neg;
  double cell_area = 0.0;          // A_cell [m^2]
  double faraday = 96485.0;        // F [C/mol]
  double gas_constant = 8.3145;    // R [J/(K mol)]
  double temperature = 298.15;     // T [K]
  double thermal_voltage = 0.0;    // u_T [V]; stored, equations use RT/F inline
  double sep_thickness = 0.0;      // d_sep [m]
  double sep_electrolyte_fraction = 0.0;  // eps_{e,sep}
  double ionic_conductivity = 0.0; // kappa_e [S/m]
  double cell_capacity = 0.0;      // Q_cell [Ah]
  double lithium_quantity = 0.0;   // Q, solid-phase lithium [Ah]
  int n_pos = 4;
  int n_neg = 4;

  void validate() const;
};

/// Reference cell of the validation study (graphite / NCA, 6 Ah).
CellParams default_cell_params();

/// Flat `key = value` parameter file. Keys follow the parameter-table names
/// (D_pos, eps_e_neg, c100_pos, ...); unknown keys are rejected. `#` starts a
/// comment. Ah-valued entries (Q, Q_cell) stay in Ah; everything else is SI.
CellParams load_params_file(const std::string& path);
CellParams parse_params(const std::string& text, const std::string& origin);
std::string serialize_params(const CellParams& p);

}  // namespace battkit
