#pragma once

#include <string>
#include <utility>
#include <vector>

#include "battkit/errors.hpp"

namespace battkit {

/// Tabulated open-circuit voltage over surface stoichiometry, evaluated
/// piecewise-linearly and extrapolated first-order beyond the table ends.
/// The extreme segment slopes double as the polytopic slope bounds: any
/// secant (OCV(z) - OCV(z'))/(z - z') lies in [slope_min, slope_max].
class OcvCurve {
public:
  OcvCurve() = default;

  double operator()(double zeta) const;

  /// Segment slope active at `zeta` (end segments extend outward).
  double local_slope(double zeta) const;

  double slope_min() const { return slope_min_; }  // C_{s,1}
  double slope_max() const { return slope_max_; }  // C_{s,2}

  const std::vector<std::pair<double, double>>& table() const {
    return table_;
  }

  friend OcvCurve load_ocv(std::vector<std::pair<double, double>> table);

private:
  std::vector<std::pair<double, double>> table_;
  std::vector<double> slopes_;
  double slope_min_ = 0.0, slope_max_ = 0.0;
};

/// Validates and wraps a (stoichiometry, voltage) table. Stoichiometries
/// must be strictly increasing within [0, 1] and at least two rows long.
OcvCurve load_ocv(std::vector<std::pair<double, double>> table);

/// Reads a two-column CSV `zeta,voltage_V` (header required).
OcvCurve load_ocv_csv(const std::string& path);
void write_ocv_csv(const OcvCurve& curve, const std::string& path,
                   const std::string& provenance = "");

/// Built-in curves for the validation cell; their extreme segment slopes are
/// C_neg = (-75.2267, -0.0067) and C_pos = (-1266.7, -0.2667).
OcvCurve canned_ocv_pos();
OcvCurve canned_ocv_neg();

}  // namespace battkit
