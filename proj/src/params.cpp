#include "battkit/params.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace battkit {

void ElectrodeParams::validate(const std::string& label) const {
  auto req = [&](bool ok, const char* what) {
    if (!ok) throw FormatError(label + ": " + what);
  };
  req(particle_radius > 0.0, "particle radius must be positive");
  req(diffusivity > 0.0, "diffusivity must be positive");
  req(volume_fraction > 0.0 && volume_fraction <= 1.0,
      "volume fraction must lie in (0, 1]");
  req(thickness > 0.0, "thickness must be positive");
  req(c_max > 0.0, "maximum concentration must be positive");
  req(exchange_current > 0.0, "exchange current density must be positive");
  req(conductivity > 0.0, "conductivity must be positive");
  req(electrolyte_fraction > 0.0, "electrolyte fraction must be positive");
  req(c_soc0 != c_soc100, "SOC calibration concentrations must differ");
}

void CellParams::validate() const {
  pos.validate("pos");
  neg.validate("neg");
  auto req = [&](bool ok, const char* what) {
    if (!ok) throw FormatError(std::string("cell: ") + what);
  };
  req(cell_area > 0.0, "cell area must be positive");
  req(faraday > 0.0, "Faraday constant must be positive");
  req(gas_constant > 0.0, "gas constant must be positive");
  req(temperature > 0.0, "temperature must be positive");
  req(sep_thickness > 0.0, "separator thickness must be positive");
  req(sep_electrolyte_fraction > 0.0,
      "separator electrolyte fraction must be positive");
  req(ionic_conductivity > 0.0, "ionic conductivity must be positive");
  req(cell_capacity > 0.0, "cell capacity must be positive");
  req(lithium_quantity > 0.0, "lithium quantity must be positive");
  req(n_pos >= 2 && n_neg >= 2, "sample counts must be at least 2");
}

CellParams default_cell_params() {
  CellParams p;
  p.cell_area = 0.8;
  p.faraday = 96485.0;
  p.gas_constant = 8.3145;
  p.temperature = 298.15;
  p.thermal_voltage = p.gas_constant * p.temperature / p.faraday;
  p.sep_thickness = 25.4e-6;
  p.sep_electrolyte_fraction = 0.5;
  p.ionic_conductivity = 0.63;
  p.cell_capacity = 6.0;
  p.lithium_quantity = 11.396;
  p.n_pos = 4;
  p.n_neg = 4;

  p.pos.particle_radius = 1e-6;
  p.pos.diffusivity = 3.7e-16;
  p.pos.volume_fraction = 0.5;
  p.pos.thickness = 36.4e-6;
  p.pos.c_max = 29461.0;
  p.pos.exchange_current = 0.54;
  p.pos.conductivity = 10.0;
  p.pos.electrolyte_fraction = 0.33;
  p.pos.c_soc0 = 25699.0;
  p.pos.c_soc100 = 10324.0;

  p.neg.particle_radius = 1e-6;
  p.neg.diffusivity = 2e-16;
  p.neg.volume_fraction = 0.58;
  p.neg.thickness = 50e-6;
  p.neg.c_max = 17525.0;
  p.neg.exchange_current = 0.75;
  p.neg.conductivity = 100.0;
  p.neg.electrolyte_fraction = 0.332;
  p.neg.c_soc0 = 2199.0;
  p.neg.c_soc100 = 11849.0;
  return p;
}

namespace {

std::map<std::string, std::function<void(CellParams&, double)>> key_setters() {
  using CP = CellParams;
  std::map<std::string, std::function<void(CP&, double)>> m;
  m["A_cell"] = [](CP& p, double v) { p.cell_area = v; };
  m["F"] = [](CP& p, double v) { p.faraday = v; };
  m["R"] = [](CP& p, double v) { p.gas_constant = v; };
  m["T"] = [](CP& p, double v) { p.temperature = v; };
  m["u_T"] = [](CP& p, double v) { p.thermal_voltage = v; };
  m["N_pos"] = [](CP& p, double v) { p.n_pos = static_cast<int>(v); };
  m["N_neg"] = [](CP& p, double v) { p.n_neg = static_cast<int>(v); };
  m["d_pos"] = [](CP& p, double v) { p.pos.thickness = v; };
  m["d_neg"] = [](CP& p, double v) { p.neg.thickness = v; };
  m["d_sep"] = [](CP& p, double v) { p.sep_thickness = v; };
  m["D_pos"] = [](CP& p, double v) { p.pos.diffusivity = v; };
  m["D_neg"] = [](CP& p, double v) { p.neg.diffusivity = v; };
  m["R_pos"] = [](CP& p, double v) { p.pos.particle_radius = v; };
  m["R_neg"] = [](CP& p, double v) { p.neg.particle_radius = v; };
  m["j0_pos"] = [](CP& p, double v) { p.pos.exchange_current = v; };
  m["j0_neg"] = [](CP& p, double v) { p.neg.exchange_current = v; };
  m["eps_pos"] = [](CP& p, double v) { p.pos.volume_fraction = v; };
  m["eps_neg"] = [](CP& p, double v) { p.neg.volume_fraction = v; };
  m["eps_e_pos"] = [](CP& p, double v) { p.pos.electrolyte_fraction = v; };
  m["eps_e_neg"] = [](CP& p, double v) { p.neg.electrolyte_fraction = v; };
  m["eps_e_sep"] = [](CP& p, double v) { p.sep_electrolyte_fraction = v; };
  m["sigma_pos"] = [](CP& p, double v) { p.pos.conductivity = v; };
  m["sigma_neg"] = [](CP& p, double v) { p.neg.conductivity = v; };
  m["kappa_e"] = [](CP& p, double v) { p.ionic_conductivity = v; };
  m["Q_cell"] = [](CP& p, double v) { p.cell_capacity = v; };
  m["Q"] = [](CP& p, double v) { p.lithium_quantity = v; };
  m["c0_pos"] = [](CP& p, double v) { p.pos.c_soc0 = v; };
  m["c0_neg"] = [](CP& p, double v) { p.neg.c_soc0 = v; };
  m["c100_pos"] = [](CP& p, double v) { p.pos.c_soc100 = v; };
  m["c100_neg"] = [](CP& p, double v) { p.neg.c_soc100 = v; };
  m["cmax_pos"] = [](CP& p, double v) { p.pos.c_max = v; };
  m["cmax_neg"] = [](CP& p, double v) { p.neg.c_max = v; };
  return m;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

CellParams parse_params(const std::string& text, const std::string& origin) {
  CellParams p = default_cell_params();
  const auto setters = key_setters();
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw FormatError(origin + ":" + std::to_string(lineno) +
                        ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    const auto it = setters.find(key);
    if (it == setters.end()) {
      throw FormatError(origin + ":" + std::to_string(lineno) +
                        ": unknown parameter '" + key + "'");
    }
    try {
      std::size_t used = 0;
      const double v = std::stod(val, &used);
      if (used != val.size() || !std::isfinite(v)) throw std::exception();
      it->second(p, v);
    } catch (...) {
      throw FormatError(origin + ":" + std::to_string(lineno) +
                        ": bad numeric value '" + val + "'");
    }
  }
  p.validate();
  return p;
}

CellParams load_params_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open parameter file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_params(buf.str(), path);
}

std::string serialize_params(const CellParams& p) {
  std::ostringstream out;
  out.precision(17);
  out << "# battkit cell parameters (SI units; Q and Q_cell in Ah)\n";
  out << "A_cell = " << p.cell_area << "\n";
  out << "F = " << p.faraday << "\n";
  out << "R = " << p.gas_constant << "\n";
  out << "T = " << p.temperature << "\n";
  out << "u_T = " << p.thermal_voltage << "\n";
  out << "N_pos = " << p.n_pos << "\n";
  out << "N_neg = " << p.n_neg << "\n";
  out << "d_pos = " << p.pos.thickness << "\n";
  out << "d_neg = " << p.neg.thickness << "\n";
  out << "d_sep = " << p.sep_thickness << "\n";
  out << "D_pos = " << p.pos.diffusivity << "\n";
  out << "D_neg = " << p.neg.diffusivity << "\n";
  out << "R_pos = " << p.pos.particle_radius << "\n";
  out << "R_neg = " << p.neg.particle_radius << "\n";
  out << "j0_pos = " << p.pos.exchange_current << "\n";
  out << "j0_neg = " << p.neg.exchange_current << "\n";
  out << "eps_pos = " << p.pos.volume_fraction << "\n";
  out << "eps_neg = " << p.neg.volume_fraction << "\n";
  out << "eps_e_pos = " << p.pos.electrolyte_fraction << "\n";
  out << "eps_e_neg = " << p.neg.electrolyte_fraction << "\n";
  out << "eps_e_sep = " << p.sep_electrolyte_fraction << "\n";
  out << "sigma_pos = " << p.pos.conductivity << "\n";
  out << "sigma_neg = " << p.neg.conductivity << "\n";
  out << "kappa_e = " << p.ionic_conductivity << "\n";
  out << "Q_cell = " << p.cell_capacity << "\n";
  out << "Q = " << p.lithium_quantity << "\n";
  out << "c0_pos = " << p.pos.c_soc0 << "\n";
  out << "c0_neg = " << p.neg.c_soc0 << "\n";
  out << "c100_pos = " << p.pos.c_soc100 << "\n";
  out << "c100_neg = " << p.neg.c_soc100 << "\n";
  out << "cmax_pos = " << p.pos.c_max << "\n";
  out << "cmax_neg = " << p.neg.c_max << "\n";
  return out.str();
}

}  // namespace battkit
