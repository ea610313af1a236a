#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "battkit/cell.hpp"
#include "battkit/observer.hpp"
#include "battkit/reference.hpp"

namespace battkit {

// ---------------------------------------------------------------------------
// Current profiles
// ---------------------------------------------------------------------------

/// Piecewise-constant cell current in generator convention (positive =
/// discharge), evaluated zero-order-hold between its breakpoints.
struct CurrentProfile {
  enum class Kind { Constant, SyntheticPhev, Csv };
  Kind kind = Kind::Constant;
  std::vector<double> knots;    ///< strictly increasing, starts at 0
  std::vector<double> amps;     ///< value on [knots[k], knots[k+1])
  double horizon = 0.0;
  std::uint64_t seed = 0;       ///< synthetic profiles only
  double scale = 0.0;           ///< synthetic: amps of one C-rate

  double operator()(double t) const;
  /// Exact integral of the ZOH signal over [0, t] [A s].
  double integral(double t) const;
};

CurrentProfile constant_profile(double amps, double horizon);

/// Seeded PHEV-style pulse train: 1-10 s dwells, amplitudes within +-2 C,
/// discharge-dominant over the first 40% of the horizon, charge-dominant
/// over the next 40%, and an exact rest tail.
CurrentProfile synthetic_phev(std::uint64_t seed, double horizon,
                              double one_c_amps);

/// Reads `time_s,current_A` (header required, time strictly increasing);
/// `current_gain` rescales the samples (sensor-correction factor).
CurrentProfile load_current_csv(const std::string& path,
                                double current_gain = 1.0);
void write_current_csv(const CurrentProfile& p, const std::string& path,
                       const std::string& provenance = "");

// ---------------------------------------------------------------------------
// Sensor bias
// ---------------------------------------------------------------------------

struct NoiseSpec {
  bool bias_current = false;
  double current_amp = 3.0;                            // [A]
  double current_omega = 2000.0 * std::numbers::pi;    // [rad/s]
  bool bias_voltage = false;
  double voltage_amp = 0.05;                           // [V]
  double voltage_omega = 200.0 * std::numbers::pi;     // [rad/s]

  double current_bias(double t) const {
    return bias_current ? current_amp * std::sin(current_omega * t) : 0.0;
  }
  double voltage_bias(double t) const {
    return bias_voltage ? voltage_amp * std::sin(voltage_omega * t) : 0.0;
  }
};

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

struct Metrics {
  double mae = 0.0;
  double rmse = 0.0;
  long samples = 0;
};

/// MAE / RMSE of an error trace over the window [t_begin, t_end] (inclusive).
Metrics metrics_over_window(const std::vector<double>& times,
                            const std::vector<double>& errors, double t_begin,
                            double t_end);

/// 100 |c_ref - c_hat| / |c_ref| (Euclidean norms).
double normalized_concentration_error(const Eigen::VectorXd& c_ref,
                                      const Eigen::VectorXd& c_hat);

/// SOC by current integration: soc0 - 100/(3600 Q_cell) * int I. With
/// percent_scale = false the literal dimensionless fraction (no soc0 term)
/// is returned instead.
std::vector<double> coulomb_soc(const CurrentProfile& profile, double q_cell,
                                double soc0_percent,
                                const std::vector<double>& times,
                                bool percent_scale = true);

// ---------------------------------------------------------------------------
// Model vs oracle comparison (voltage + surface concentrations)
// ---------------------------------------------------------------------------

struct OracleSpec {
  int n_ref = 400;
  double dt = 0.5;     // [s]
  int sample_stride = 2;
};

struct ComparisonTraces {
  std::vector<double> times;
  std::vector<double> y_uncorrected, y_corrected, y_oracle;
  std::vector<double> surf_pos_unc, surf_pos_cor, surf_pos_oracle;
  std::vector<double> surf_neg_unc, surf_neg_cor, surf_neg_oracle;
  /// metrics keyed "<trace>/<window>", e.g. "voltage_uncorrected_mV/full"
  std::map<std::string, Metrics> metrics;
  std::map<std::string, double> improvements_percent;
};

/// Runs the reduced model (one trajectory; both output maps) and the fine
/// oracle on the same profile from the same uniform initial SOC, then
/// tabulates voltage and surface-concentration errors over the full and
/// active-current windows.
ComparisonTraces compare_model_to_oracle(const CellModel& model,
                                         const CurrentProfile& profile,
                                         double soc0_percent, double dt_model,
                                         const OracleSpec& oracle,
                                         double active_window_end);

// ---------------------------------------------------------------------------
// Estimation campaign
// ---------------------------------------------------------------------------

struct CampaignConfig {
  std::vector<double> initial_soc_estimates;  // percent
  std::vector<double> gain_scales;            // multiply the designed L
  double true_initial_soc = 100.0;
  double dt = 0.1;                            // observer step ceiling [s]
  OracleSpec oracle;
  bool oracle_plant = true;   // plant = fine PDE oracle (else reduced model)
  NoiseSpec noise;
  double active_window_end = 3600.0;
  int sample_stride = 10;     // metric sampling (each k-th observer step)
  int trace_stride = 10;      // trace rows per metric sample (sink only)
  int threads = 0;            // 0 = BATTKIT_THREADS env or 1
};

CampaignConfig default_campaign_config();

struct ScenarioMetrics {
  double gain_scale = 1.0;
  double initial_soc_estimate = 0.0;
  std::string estimator;  // "uncorrected" | "corrected" | "corrected+chat"
  Metrics e_soc;          // percent
  Metrics e_c_pos;        // percent (normalized concentration error)
  Metrics e_c_neg;        // percent
};

struct CampaignResult {
  std::vector<ScenarioMetrics> scenarios;      // deterministic order
  /// averaged over initial-SOC scenarios: key "<gain>/<estimator>"
  std::map<std::string, ScenarioMetrics> averages;
  /// improvement (percent) of each estimator vs "uncorrected":
  /// key "<gain>/<estimator>/<trace>_<stat>"
  std::map<std::string, double> improvements;
};

/// Per-run record handed to the optional trace sink (one per scenario and
/// estimator, subsampled by CampaignConfig::trace_stride).
struct RunTrace {
  double gain_scale = 1.0;
  double initial_soc_estimate = 0.0;
  std::string estimator;
  std::vector<double> t, soc_true, soc_est, e_soc, y_true, y_est, e_c_pos,
      e_c_neg;
  Eigen::MatrixXd c_est_neg;  // rows per sample, includes recovered center
  Eigen::MatrixXd c_est_pos;
};

/// Called once per finished run; runs touch distinct scenarios, so a sink
/// writing one file per trace needs no synchronization.
using TraceSink = std::function<void(const RunTrace&)>;

/// Runs the estimation sweep: every initial SOC estimate x gain scale x
/// the three estimator variants against the shared plant trajectory.
/// Scenario order (and therefore the result) is independent of threading.
CampaignResult run_campaign(const CellModel& model,
                            const ObserverDesign& design,
                            const CurrentProfile& profile,
                            const CampaignConfig& config,
                            const TraceSink& trace_sink = {});

}  // namespace battkit
