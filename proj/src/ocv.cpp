#include "battkit/ocv.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace battkit {

OcvCurve load_ocv(std::vector<std::pair<double, double>> table) {
  if (table.size() < 2) {
    throw FormatError("OCV table needs at least 2 rows");
  }
  for (std::size_t i = 0; i < table.size(); ++i) {
    const auto [z, v] = table[i];
    if (!std::isfinite(z) || !std::isfinite(v)) {
      throw FormatError("OCV table row " + std::to_string(i + 1) +
                        ": non-finite entry");
    }
    if (z < -1e-12 || z > 1.0 + 1e-12) {
      throw FormatError("OCV table row " + std::to_string(i + 1) +
                        ": stoichiometry outside [0, 1]");
    }
    if (i > 0 && !(z > table[i - 1].first)) {
      throw FormatError("OCV table row " + std::to_string(i + 1) +
                        ": stoichiometry must be strictly increasing");
    }
  }
  OcvCurve c;
  c.table_ = std::move(table);
  c.slopes_.resize(c.table_.size() - 1);
  for (std::size_t i = 0; i + 1 < c.table_.size(); ++i) {
    c.slopes_[i] = (c.table_[i + 1].second - c.table_[i].second) /
                   (c.table_[i + 1].first - c.table_[i].first);
  }
  c.slope_min_ = *std::min_element(c.slopes_.begin(), c.slopes_.end());
  c.slope_max_ = *std::max_element(c.slopes_.begin(), c.slopes_.end());
  return c;
}

double OcvCurve::operator()(double zeta) const {
  const auto& t = table_;
  if (zeta <= t.front().first) {
    return t.front().second + slopes_.front() * (zeta - t.front().first);
  }
  if (zeta >= t.back().first) {
    return t.back().second + slopes_.back() * (zeta - t.back().first);
  }
  std::size_t lo = 0, hi = t.size() - 1;
  while (hi - lo > 1) {
    const std::size_t mid = (lo + hi) / 2;
    (t[mid].first <= zeta ? lo : hi) = mid;
  }
  return t[lo].second + slopes_[lo] * (zeta - t[lo].first);
}

double OcvCurve::local_slope(double zeta) const {
  const auto& t = table_;
  if (zeta <= t.front().first) return slopes_.front();
  if (zeta >= t.back().first) return slopes_.back();
  std::size_t lo = 0, hi = t.size() - 1;
  while (hi - lo > 1) {
    const std::size_t mid = (lo + hi) / 2;
    (t[mid].first <= zeta ? lo : hi) = mid;
  }
  return slopes_[lo];
}

OcvCurve load_ocv_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open OCV file: " + path);
  std::string line;
  int lineno = 0;
  bool header_seen = false;
  std::vector<std::pair<double, double>> rows;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line[0] == '#') continue;
    if (!header_seen) {
      std::string compact;
      for (char ch : line) {
        if (!isspace(static_cast<unsigned char>(ch))) compact += ch;
      }
      if (compact != "zeta,voltage_V") {
        throw FormatError(path + ":" + std::to_string(lineno) +
                          ": expected header 'zeta,voltage_V'");
      }
      header_seen = true;
      continue;
    }
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ss(line);
    std::string a, b;
    if (!std::getline(ss, a, ',') || !std::getline(ss, b)) {
      throw FormatError(path + ":" + std::to_string(lineno) +
                        ": expected two comma-separated columns");
    }
    try {
      rows.emplace_back(std::stod(a), std::stod(b));
    } catch (...) {
      throw FormatError(path + ":" + std::to_string(lineno) +
                        ": bad numeric value");
    }
  }
  if (!header_seen) throw FormatError(path + ": missing header");
  return load_ocv(std::move(rows));
}

void write_ocv_csv(const OcvCurve& curve, const std::string& path,
                   const std::string& provenance) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path);
  if (!provenance.empty()) out << "# " << provenance << "\n";
  out << "zeta,voltage_V\n";
  out.precision(10);
  for (const auto& [z, v] : curve.table()) out << z << ',' << v << "\n";
}

OcvCurve canned_ocv_pos() {
  return load_ocv({{0.00, 4.600000},
                   {0.10, 4.470000},
                   {0.20, 4.380000},
                   {0.30, 4.295000},
                   {0.40, 4.220000},
                   {0.55, 4.130000},
                   {0.62, 4.111331},
                   {0.75, 4.000000},
                   {0.85, 3.600000},
                   {0.88, 3.300000},
                   {0.95, 3.100000},
                   {0.999, 3.050000},
                   {1.00, 1.783300}});
}

OcvCurve canned_ocv_neg() {
  return load_ocv({{0.00, 1.200000},
                   {0.01, 0.447733},
                   {0.05, 0.300000},
                   {0.12, 0.220000},
                   {0.20, 0.170000},
                   {0.35, 0.140000},
                   {0.55, 0.138660},
                   {0.75, 0.090000},
                   {0.90, 0.075000},
                   {1.00, 0.045000}});
}

}  // namespace battkit
