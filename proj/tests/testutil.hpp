#pragma once

#include "battkit/cell.hpp"
#include "battkit/ocv.hpp"
#include "battkit/params.hpp"

namespace battkit::testutil {

inline ElectrodeBlock electrode(Side side, int samples,
                                GridScheme scheme = GridScheme::UniformVolume) {
  const CellParams p = default_cell_params();
  const ElectrodeParams& ep = side == Side::Pos ? p.pos : p.neg;
  OcvCurve ocv = side == Side::Pos ? canned_ocv_pos() : canned_ocv_neg();
  return make_electrode_block(ep, samples, scheme, std::move(ocv), p);
}

/// Standard validation cell (4+4 samples, uniform volume) with the lithium
/// inventory taken at the given starting SOC so the equilibrium start is
/// exactly consistent with the reduction.
inline CellModel model(double initial_soc = 100.0, int n_neg = 4,
                       int n_pos = 4,
                       GridScheme scheme = GridScheme::UniformVolume) {
  ElectrodeBlock neg = electrode(Side::Neg, n_neg, scheme);
  ElectrodeBlock pos = electrode(Side::Pos, n_pos, scheme);
  const double q = lithium_at_equilibrium(neg, pos, initial_soc);
  return assemble_cell(std::move(neg), std::move(pos), q,
                       default_cell_params());
}

}  // namespace battkit::testutil
