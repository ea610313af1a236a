#include "battkit/sim.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>
#include <thread>

namespace battkit {

// ---------------------------------------------------------------------------
// Current profiles
// ---------------------------------------------------------------------------

double CurrentProfile::operator()(double t) const {
  if (knots.empty()) return 0.0;
  if (t <= knots.front()) return amps.front();
  if (t >= knots.back()) return amps.back();
  std::size_t lo = 0, hi = knots.size() - 1;
  while (hi - lo > 1) {
    const std::size_t mid = (lo + hi) / 2;
    (knots[mid] <= t ? lo : hi) = mid;
  }
  return amps[lo];
}

double CurrentProfile::integral(double t) const {
  if (knots.empty() || t <= knots.front()) return 0.0;
  double acc = 0.0;
  for (std::size_t k = 0; k + 1 < knots.size(); ++k) {
    const double e = std::min(t, knots[k + 1]);
    if (e <= knots[k]) break;
    acc += amps[k] * (e - knots[k]);
    if (t <= knots[k + 1]) return acc;
  }
  acc += amps.back() * (t - knots.back());
  return acc;
}

CurrentProfile constant_profile(double amps_value, double horizon) {
  CurrentProfile p;
  p.kind = CurrentProfile::Kind::Constant;
  p.horizon = horizon;
  p.knots = {0.0};
  p.amps = {amps_value};
  return p;
}

namespace {

struct SeededUniform {
  std::mt19937_64 rng;
  explicit SeededUniform(std::uint64_t seed) : rng(seed) {}
  double unit() {  // [0, 1), identical across platforms
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
  }
  double range(double lo, double hi) { return lo + (hi - lo) * unit(); }
  int dwell() { return 1 + static_cast<int>(rng() % 10); }
};

}  // namespace

CurrentProfile synthetic_phev(std::uint64_t seed, double horizon,
                              double one_c_amps) {
  if (!(horizon > 0.0)) throw InputError("synthetic profile needs horizon > 0");
  CurrentProfile p;
  p.kind = CurrentProfile::Kind::SyntheticPhev;
  p.horizon = horizon;
  p.seed = seed;
  p.scale = one_c_amps;

  SeededUniform u(seed);
  const double t_discharge = 0.4 * horizon;
  const double t_charge = 0.8 * horizon;
  double t = 0.0;
  while (t < t_charge) {
    const bool discharge_half = t < t_discharge;
    const double seg_end = discharge_half ? t_discharge : t_charge;
    const double amp = discharge_half ? u.range(-0.5, 2.0) * one_c_amps
                                      : u.range(-2.0, 0.5) * one_c_amps;
    p.knots.push_back(t);
    p.amps.push_back(amp);
    t = std::min(t + u.dwell(), seg_end);
  }
  p.knots.push_back(t_charge);
  p.amps.push_back(0.0);  // terminal rest
  return p;
}

CurrentProfile load_current_csv(const std::string& path, double current_gain) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open current file: " + path);
  CurrentProfile p;
  p.kind = CurrentProfile::Kind::Csv;
  std::string line;
  int lineno = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line[0] == '#') continue;
    if (!header_seen) {
      std::string compact;
      for (char ch : line) {
        if (!isspace(static_cast<unsigned char>(ch))) compact += ch;
      }
      if (compact != "time_s,current_A") {
        throw FormatError(path + ":" + std::to_string(lineno) +
                          ": expected header 'time_s,current_A'");
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
    double tv = 0.0, iv = 0.0;
    try {
      tv = std::stod(a);
      iv = std::stod(b);
    } catch (...) {
      throw FormatError(path + ":" + std::to_string(lineno) +
                        ": bad numeric value");
    }
    if (!p.knots.empty() && tv <= p.knots.back()) {
      throw FormatError(path + ":" + std::to_string(lineno) +
                        ": time samples must increase strictly");
    }
    p.knots.push_back(tv);
    p.amps.push_back(iv * current_gain);
  }
  if (!header_seen) throw FormatError(path + ": missing header");
  if (p.knots.empty()) throw FormatError(path + ": no samples");
  p.horizon = p.knots.back();
  return p;
}

void write_current_csv(const CurrentProfile& p, const std::string& path,
                       const std::string& provenance) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path);
  if (!provenance.empty()) out << "# " << provenance << "\n";
  out << "time_s,current_A\n";
  out.precision(12);
  for (std::size_t k = 0; k < p.knots.size(); ++k) {
    out << p.knots[k] << ',' << p.amps[k] << "\n";
  }
}

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

Metrics metrics_over_window(const std::vector<double>& times,
                            const std::vector<double>& errors, double t_begin,
                            double t_end) {
  if (times.size() != errors.size()) {
    throw InputError("metrics: trace sizes differ");
  }
  Metrics m;
  double sum_abs = 0.0, sum_sq = 0.0;
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (times[k] < t_begin || times[k] > t_end) continue;
    sum_abs += std::abs(errors[k]);
    sum_sq += errors[k] * errors[k];
    ++m.samples;
  }
  if (m.samples == 0) throw InputError("metrics: empty window");
  m.mae = sum_abs / static_cast<double>(m.samples);
  m.rmse = std::sqrt(sum_sq / static_cast<double>(m.samples));
  return m;
}

double normalized_concentration_error(const Eigen::VectorXd& c_ref,
                                      const Eigen::VectorXd& c_hat) {
  const double ref_norm = c_ref.norm();
  if (!(ref_norm > 0.0)) {
    throw InputError("normalized concentration error: zero reference norm");
  }
  return 100.0 * (c_ref - c_hat).norm() / ref_norm;
}

std::vector<double> coulomb_soc(const CurrentProfile& profile, double q_cell,
                                double soc0_percent,
                                const std::vector<double>& times,
                                bool percent_scale) {
  if (!(q_cell > 0.0)) throw InputError("coulomb counting needs Q_cell > 0");
  std::vector<double> soc;
  soc.reserve(times.size());
  for (double t : times) {
    const double frac = -profile.integral(t) / (3600.0 * q_cell);
    soc.push_back(percent_scale ? soc0_percent + 100.0 * frac : frac);
  }
  return soc;
}

// ---------------------------------------------------------------------------
// Shared plant traces
// ---------------------------------------------------------------------------

namespace {

/// Truth signals sampled on a uniform grid, linear interpolation between
/// samples. Holds everything the estimators are scored against.
struct PlantTraces {
  std::vector<double> times;
  std::vector<double> y;         // terminal voltage (bias-free)
  std::vector<double> soc;       // percent, from positive-electrode mean
  Eigen::MatrixXd conc_neg;      // rows = times, cols = model radii
  Eigen::MatrixXd conc_pos;
  double dt_sample = 0.0;

  double interp(const std::vector<double>& trace, double t) const {
    if (t <= times.front()) return trace.front();
    if (t >= times.back()) return trace.back();
    const double pos = (t - times.front()) / dt_sample;
    const std::size_t k =
        std::min(static_cast<std::size_t>(pos), trace.size() - 2);
    const double w = pos - static_cast<double>(k);
    return (1.0 - w) * trace[k] + w * trace[k + 1];
  }
  double y_at(double t) const { return interp(y, t); }
};

PlantTraces oracle_plant_traces(const CellModel& model,
                                const CurrentProfile& profile, double soc0,
                                double horizon, const OracleSpec& spec) {
  PlantTraces out;
  const auto& nb = model.block(Side::Neg);
  const auto& pb = model.block(Side::Pos);

  ReferenceRequest req;
  req.n_ref = spec.n_ref;
  req.horizon = horizon;
  req.dt = spec.dt;
  req.sample_stride = spec.sample_stride;

  req.query_radii = nb.grid.outer_radii;
  const double cn0 = nb.params.c_soc0 +
                     soc0 / 100.0 * (nb.params.c_soc100 - nb.params.c_soc0);
  const ReferenceSolution neg = solve_reference(
      nb.params,
      [&](double t) { return m_from_current(profile(t), Side::Neg,
                                            model.params()); },
      cn0, req);

  req.query_radii = pb.grid.outer_radii;
  const double cp0 = pb.params.c_soc0 +
                     soc0 / 100.0 * (pb.params.c_soc100 - pb.params.c_soc0);
  const ReferenceSolution pos = solve_reference(
      pb.params,
      [&](double t) { return m_from_current(profile(t), Side::Pos,
                                            model.params()); },
      cp0, req);

  const std::size_t n = pos.times().size();
  if (neg.times().size() != n) {
    throw NumericalFailure("oracle electrode traces misaligned");
  }
  out.times = pos.times();
  out.dt_sample = out.times.size() > 1 ? out.times[1] - out.times[0] : 1.0;
  out.y.resize(n);
  out.soc.resize(n);
  out.conc_neg = neg.at_radii();
  out.conc_pos = pos.at_radii();
  for (std::size_t k = 0; k < n; ++k) {
    const double u = profile(out.times[k]);
    out.y[k] = pb.ocv(pos.surface()[k] / pb.params.c_max) -
               nb.ocv(neg.surface()[k] / nb.params.c_max) +
               model.overpotentials(u);
    out.soc[k] = model.soc_from_mean(pos.mean()[k], Side::Pos);
  }
  return out;
}

PlantTraces model_plant_traces(const CellModel& model,
                               const CurrentProfile& profile, double soc0,
                               double horizon, double dt, int stride) {
  PlantTraces out;
  const Eigen::Index nn = model.block(Side::Neg).grid.sample_count();
  const Eigen::Index np = model.block(Side::Pos).grid.sample_count();
  const TimeGrid grid = make_time_grid(horizon, dt);
  Eigen::VectorXd x = model.equilibrium_state(soc0);

  const long n_rows =
      grid.steps / stride + 1 + (grid.steps % stride ? 1 : 0);
  out.conc_neg.resize(n_rows, nn);
  out.conc_pos.resize(n_rows, np);
  auto record = [&](double t, const Eigen::VectorXd& xs) {
    const double u = profile(t);
    const long row = static_cast<long>(out.times.size());
    out.times.push_back(t);
    out.y.push_back(model.output_voltage(xs, u, true));
    const auto [cn, cp] = model.full_concentrations(xs);
    out.soc.push_back(
        model.soc_from_mean(model.block(Side::Pos).grid.volume_mean(cp),
                            Side::Pos));
    out.conc_neg.row(row) = cn.transpose();
    out.conc_pos.row(row) = cp.transpose();
  };
  record(0.0, x);
  const double q0 = model.lithium_quantity_of(x);
  double q_drift = 0.0;
  integrate_rk4(
      [&](double t, const Eigen::VectorXd& xs) -> Eigen::VectorXd {
        return model.A() * xs + model.B() * profile(t) + model.K();
      },
      x, grid, [&](long k, double t, const Eigen::VectorXd& xs) {
        if (k % stride == 0 || k == grid.steps) {
          record(t, xs);
          q_drift = std::max(q_drift,
                             std::abs(model.lithium_quantity_of(xs) - q0));
        }
      });
  if (q_drift > 1e-9 * std::abs(q0)) {
    throw NumericalFailure("plant run lost lithium conservation (drift " +
                           std::to_string(q_drift) + " Ah)");
  }
  out.dt_sample = out.times.size() > 1 ? out.times[1] - out.times[0] : 1.0;
  return out;
}

double spectral_radius_cap(const CellModel& model, const Eigen::VectorXd& L) {
  const PolytopeVertices v = build_vertices(model);
  double worst = 0.0;
  for (const auto& Ci : v.C) {
    const Eigen::MatrixXd Acl = model.A() - L * Ci;
    Eigen::EigenSolver<Eigen::MatrixXd> es(Acl, false);
    worst = std::max(worst, es.eigenvalues().cwiseAbs().maxCoeff());
  }
  return worst;
}

}  // namespace

// ---------------------------------------------------------------------------
// Model vs oracle comparison
// ---------------------------------------------------------------------------

ComparisonTraces compare_model_to_oracle(const CellModel& model,
                                         const CurrentProfile& profile,
                                         double soc0_percent, double dt_model,
                                         const OracleSpec& oracle,
                                         double active_window_end) {
  const double horizon = profile.horizon;
  const double sample_dt = oracle.dt * oracle.sample_stride;
  const int model_stride =
      std::max(1, static_cast<int>(std::lround(sample_dt / dt_model)));

  ComparisonTraces out;
  const auto& nb = model.block(Side::Neg);
  const auto& pb = model.block(Side::Pos);

  // One reduced trajectory; both output maps read from it.
  {
    const TimeGrid grid = make_time_grid(horizon, dt_model);
    Eigen::VectorXd x = model.equilibrium_state(soc0_percent);
    auto record = [&](double t, const Eigen::VectorXd& xs) {
      const double u = profile(t);
      out.times.push_back(t);
      out.y_uncorrected.push_back(model.output_voltage(xs, u, false));
      out.y_corrected.push_back(model.output_voltage(xs, u, true));
      const auto [cn, cp] = model.full_concentrations(xs);
      const auto [ccn, ccp] = model.corrected_concentrations(xs);
      out.surf_neg_unc.push_back(cn[cn.size() - 1]);
      out.surf_pos_unc.push_back(cp[cp.size() - 1]);
      out.surf_neg_cor.push_back(ccn[ccn.size() - 1]);
      out.surf_pos_cor.push_back(ccp[ccp.size() - 1]);
    };
    record(0.0, x);
    integrate_rk4(
        [&](double t, const Eigen::VectorXd& xs) -> Eigen::VectorXd {
          return model.A() * xs + model.B() * profile(t) + model.K();
        },
        x, grid, [&](long k, double t, const Eigen::VectorXd& xs) {
          if (k % model_stride == 0 || k == grid.steps) record(t, xs);
        });
  }

  // Oracle surfaces on the same sampling cadence.
  ReferenceRequest req;
  req.n_ref = oracle.n_ref;
  req.horizon = horizon;
  req.dt = oracle.dt;
  req.sample_stride = oracle.sample_stride;
  const double cn0 =
      nb.params.c_soc0 +
      soc0_percent / 100.0 * (nb.params.c_soc100 - nb.params.c_soc0);
  const double cp0 =
      pb.params.c_soc0 +
      soc0_percent / 100.0 * (pb.params.c_soc100 - pb.params.c_soc0);
  const ReferenceSolution neg = solve_reference(
      nb.params,
      [&](double t) {
        return m_from_current(profile(t), Side::Neg, model.params());
      },
      cn0, req);
  const ReferenceSolution pos = solve_reference(
      pb.params,
      [&](double t) {
        return m_from_current(profile(t), Side::Pos, model.params());
      },
      cp0, req);

  // pair each model sample with the nearest oracle record
  const double oracle_dt = pos.times().size() > 1
                               ? pos.times()[1] - pos.times()[0]
                               : 1.0;
  auto oracle_row = [&](double t) {
    return std::min(
        static_cast<std::size_t>(std::lround(t / oracle_dt)),
        pos.times().size() - 1);
  };

  std::vector<double> e_v_unc, e_v_cor, e_cp_unc, e_cp_cor, e_cn_unc, e_cn_cor;
  for (std::size_t k = 0; k < out.times.size(); ++k) {
    const double u = profile(out.times[k]);
    const std::size_t rk = oracle_row(out.times[k]);
    const double surf_p = pos.surface()[rk];
    const double surf_n = neg.surface()[rk];
    const double y_or = pb.ocv(surf_p / pb.params.c_max) -
                        nb.ocv(surf_n / nb.params.c_max) +
                        model.overpotentials(u);
    out.y_oracle.push_back(y_or);
    out.surf_pos_oracle.push_back(surf_p);
    out.surf_neg_oracle.push_back(surf_n);
    e_v_unc.push_back(out.y_uncorrected[k] - y_or);
    e_v_cor.push_back(out.y_corrected[k] - y_or);
    e_cp_unc.push_back(100.0 * std::abs(out.surf_pos_unc[k] - surf_p) /
                       std::abs(surf_p));
    e_cp_cor.push_back(100.0 * std::abs(out.surf_pos_cor[k] - surf_p) /
                       std::abs(surf_p));
    e_cn_unc.push_back(100.0 * std::abs(out.surf_neg_unc[k] - surf_n) /
                       std::abs(surf_n));
    e_cn_cor.push_back(100.0 * std::abs(out.surf_neg_cor[k] - surf_n) /
                       std::abs(surf_n));
  }

  const std::pair<std::string, std::pair<double, double>> windows[] = {
      {"full", {0.0, horizon}}, {"active", {0.0, active_window_end}}};
  auto put = [&](const std::string& name, const std::vector<double>& err,
                 double scale_to_unit) {
    for (const auto& [wname, w] : windows) {
      Metrics m = metrics_over_window(out.times, err, w.first, w.second);
      m.mae *= scale_to_unit;
      m.rmse *= scale_to_unit;
      out.metrics[name + "/" + wname] = m;
    }
  };
  put("voltage_uncorrected_mV", e_v_unc, 1000.0);
  put("voltage_corrected_mV", e_v_cor, 1000.0);
  put("surf_pos_uncorrected_pct", e_cp_unc, 1.0);
  put("surf_pos_corrected_pct", e_cp_cor, 1.0);
  put("surf_neg_uncorrected_pct", e_cn_unc, 1.0);
  put("surf_neg_corrected_pct", e_cn_cor, 1.0);

  for (const char* base :
       {"voltage", "surf_pos", "surf_neg"}) {
    for (const auto& [wname, w] : windows) {
      const std::string unit =
          std::string(base) == "voltage" ? "_mV" : "_pct";
      const Metrics& mu =
          out.metrics.at(std::string(base) + "_uncorrected" + unit + "/" + wname);
      const Metrics& mc =
          out.metrics.at(std::string(base) + "_corrected" + unit + "/" + wname);
      out.improvements_percent[std::string(base) + "_mae/" + wname] =
          100.0 * (1.0 - mc.mae / mu.mae);
      out.improvements_percent[std::string(base) + "_rmse/" + wname] =
          100.0 * (1.0 - mc.rmse / mu.rmse);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Campaign
// ---------------------------------------------------------------------------

CampaignConfig default_campaign_config() {
  CampaignConfig c;
  for (int s = 0; s <= 100; s += 5) c.initial_soc_estimates.push_back(s);
  c.gain_scales = {1.0, 10.0, 0.1};
  c.noise.bias_current = true;
  c.noise.bias_voltage = true;
  return c;
}

namespace {

int resolve_threads(int requested, std::size_t jobs) {
  int t = requested;
  if (t <= 0) {
    if (const char* env = std::getenv("BATTKIT_THREADS")) {
      t = std::atoi(env);
    }
  }
  if (t <= 0) t = 1;
  return std::min<int>(t, static_cast<int>(std::max<std::size_t>(jobs, 1)));
}

}  // namespace

CampaignResult run_campaign(const CellModel& model,
                            const ObserverDesign& design,
                            const CurrentProfile& profile,
                            const CampaignConfig& config,
                            const TraceSink& trace_sink) {
  const double horizon = profile.horizon;
  const PlantTraces plant =
      config.oracle_plant
          ? oracle_plant_traces(model, profile, config.true_initial_soc,
                                horizon, config.oracle)
          : model_plant_traces(model, profile, config.true_initial_soc,
                               horizon, config.dt, config.sample_stride);

  struct Job {
    double gain_scale;
    double soc0_est;
  };
  std::vector<Job> jobs;
  for (double g : config.gain_scales) {
    for (double s : config.initial_soc_estimates) jobs.push_back({g, s});
  }

  // Stability-aware observer step per gain scale (explicit integrator).
  std::map<double, double> dt_for_gain;
  for (double g : config.gain_scales) {
    const double rad = spectral_radius_cap(model, g * design.L);
    double dt = config.dt;
    if (rad > 0.0) dt = std::min(dt, 2.0 / rad);
    dt_for_gain[g] = dt;
  }

  const char* estimator_names[3] = {"uncorrected", "corrected",
                                    "corrected+chat"};
  std::vector<std::array<ScenarioMetrics, 3>> results(jobs.size());

  auto run_job = [&](std::size_t ji) {
    const Job& job = jobs[ji];
    const double dt = dt_for_gain.at(job.gain_scale);
    const TimeGrid grid = make_time_grid(horizon, dt);
    const int stride = std::max(
        1, static_cast<int>(std::lround(plant.dt_sample / grid.dt)));
    const Eigen::VectorXd Lg = job.gain_scale * design.L;
    const Eigen::VectorXd xhat0 = model.equilibrium_state(job.soc0_est);

    auto u_meas = [&](double t) {
      return profile(t) + config.noise.current_bias(t);
    };
    auto y_meas = [&](double t) {
      return plant.y_at(t) + config.noise.voltage_bias(t);
    };

    for (int variant = 0; variant < 2; ++variant) {
      const bool corrected = variant == 1;
      const ObserverTrajectory traj = simulate_observer(
          model, Lg, corrected, u_meas, y_meas, xhat0, grid, stride);

      // score against the plant samples nearest to each recorded time
      const std::size_t n = traj.times.size();
      std::vector<double> ts, e_soc_raw, e_cp_raw, e_cn_raw, e_soc_cor,
          e_cp_cor, e_cn_cor;
      ts.reserve(n);
      RunTrace raw_trace, cor_trace;
      const int tstride = std::max(1, config.trace_stride);
      for (std::size_t k = 0; k < n; ++k) {
        const double t = traj.times[k];
        const std::size_t pk = std::min(
            static_cast<std::size_t>(
                std::lround((t - plant.times.front()) / plant.dt_sample)),
            plant.times.size() - 1);
        const Eigen::VectorXd xh = traj.xhat.row(k).transpose();
        const auto [cn, cp] = model.full_concentrations(xh);
        const double soc_true = plant.soc[pk];
        const Eigen::VectorXd cn_true = plant.conc_neg.row(pk).transpose();
        const Eigen::VectorXd cp_true = plant.conc_pos.row(pk).transpose();
        ts.push_back(t);
        const double soc_raw = model.soc_from_mean(
            model.block(Side::Pos).grid.volume_mean(cp), Side::Pos);
        e_soc_raw.push_back(soc_true - soc_raw);
        e_cp_raw.push_back(normalized_concentration_error(cp_true, cp));
        e_cn_raw.push_back(normalized_concentration_error(cn_true, cn));
        double soc_cor = 0.0;
        Eigen::VectorXd ccn, ccp;
        if (corrected) {
          std::tie(ccn, ccp) = model.corrected_concentrations(xh);
          soc_cor = model.soc_from_mean(
              model.block(Side::Pos).grid.volume_mean(ccp), Side::Pos);
          e_soc_cor.push_back(soc_true - soc_cor);
          e_cp_cor.push_back(normalized_concentration_error(cp_true, ccp));
          e_cn_cor.push_back(normalized_concentration_error(cn_true, ccn));
        }
        if (trace_sink && k % std::size_t(tstride) == 0) {
          auto push = [&](RunTrace& tr, double soc_e, double ecp, double ecn,
                          const Eigen::VectorXd& en_,
                          const Eigen::VectorXd& ep_) {
            tr.t.push_back(t);
            tr.soc_true.push_back(soc_true);
            tr.soc_est.push_back(soc_e);
            tr.e_soc.push_back(soc_true - soc_e);
            tr.y_true.push_back(plant.y_at(t));
            tr.y_est.push_back(
                model.output_voltage(xh, profile(t), corrected));
            tr.e_c_pos.push_back(ecp);
            tr.e_c_neg.push_back(ecn);
            const long row = long(tr.t.size()) - 1;
            tr.c_est_neg.conservativeResize(row + 1, en_.size());
            tr.c_est_pos.conservativeResize(row + 1, ep_.size());
            tr.c_est_neg.row(row) = en_.transpose();
            tr.c_est_pos.row(row) = ep_.transpose();
          };
          push(raw_trace, soc_raw, e_cp_raw.back(), e_cn_raw.back(), cn, cp);
          if (corrected) {
            push(cor_trace, soc_cor, e_cp_cor.back(), e_cn_cor.back(), ccn,
                 ccp);
          }
        }
      }
      auto fill = [&](ScenarioMetrics& sm, const std::vector<double>& es,
                      const std::vector<double>& ep,
                      const std::vector<double>& en) {
        sm.gain_scale = job.gain_scale;
        sm.initial_soc_estimate = job.soc0_est;
        sm.e_soc = metrics_over_window(ts, es, 0.0, horizon);
        sm.e_c_pos = metrics_over_window(ts, ep, 0.0, horizon);
        sm.e_c_neg = metrics_over_window(ts, en, 0.0, horizon);
      };
      auto emit = [&](RunTrace& tr, const char* name) {
        if (!trace_sink) return;
        tr.gain_scale = job.gain_scale;
        tr.initial_soc_estimate = job.soc0_est;
        tr.estimator = name;
        trace_sink(tr);
      };
      if (!corrected) {
        results[ji][0].estimator = estimator_names[0];
        fill(results[ji][0], e_soc_raw, e_cp_raw, e_cn_raw);
        emit(raw_trace, estimator_names[0]);
      } else {
        results[ji][1].estimator = estimator_names[1];
        fill(results[ji][1], e_soc_raw, e_cp_raw, e_cn_raw);
        emit(raw_trace, estimator_names[1]);
        results[ji][2].estimator = estimator_names[2];
        fill(results[ji][2], e_soc_cor, e_cp_cor, e_cn_cor);
        emit(cor_trace, estimator_names[2]);
      }
    }
  };

  const int n_threads = resolve_threads(config.threads, jobs.size());
  if (n_threads <= 1) {
    for (std::size_t ji = 0; ji < jobs.size(); ++ji) run_job(ji);
  } else {
    std::vector<std::thread> pool;
    std::atomic<std::size_t> next{0};
    for (int w = 0; w < n_threads; ++w) {
      pool.emplace_back([&] {
        for (;;) {
          const std::size_t ji = next.fetch_add(1);
          if (ji >= jobs.size()) return;
          run_job(ji);
        }
      });
    }
    for (auto& th : pool) th.join();
  }

  CampaignResult out;
  for (std::size_t ji = 0; ji < jobs.size(); ++ji) {
    for (int v = 0; v < 3; ++v) out.scenarios.push_back(results[ji][v]);
  }

  // averages per (gain, estimator) over the initial-SOC sweep
  for (double g : config.gain_scales) {
    for (int v = 0; v < 3; ++v) {
      ScenarioMetrics avg;
      avg.gain_scale = g;
      avg.estimator = estimator_names[v];
      long count = 0;
      for (const auto& sm : out.scenarios) {
        if (sm.gain_scale != g || sm.estimator != estimator_names[v]) continue;
        avg.e_soc.mae += sm.e_soc.mae;
        avg.e_soc.rmse += sm.e_soc.rmse;
        avg.e_c_pos.mae += sm.e_c_pos.mae;
        avg.e_c_pos.rmse += sm.e_c_pos.rmse;
        avg.e_c_neg.mae += sm.e_c_neg.mae;
        avg.e_c_neg.rmse += sm.e_c_neg.rmse;
        ++count;
      }
      for (double* p : {&avg.e_soc.mae, &avg.e_soc.rmse, &avg.e_c_pos.mae,
                        &avg.e_c_pos.rmse, &avg.e_c_neg.mae,
                        &avg.e_c_neg.rmse}) {
        *p /= static_cast<double>(count);
      }
      avg.e_soc.samples = avg.e_c_pos.samples = avg.e_c_neg.samples = count;
      out.averages[std::to_string(g) + "/" + estimator_names[v]] = avg;
    }
  }

  for (double g : config.gain_scales) {
    const auto& base =
        out.averages.at(std::to_string(g) + "/" + estimator_names[0]);
    for (int v = 1; v < 3; ++v) {
      const auto& est =
          out.averages.at(std::to_string(g) + "/" + estimator_names[v]);
      const std::string pre =
          std::to_string(g) + "/" + estimator_names[v] + "/";
      out.improvements[pre + "e_soc_mae"] =
          100.0 * (1.0 - est.e_soc.mae / base.e_soc.mae);
      out.improvements[pre + "e_soc_rmse"] =
          100.0 * (1.0 - est.e_soc.rmse / base.e_soc.rmse);
      out.improvements[pre + "e_c_pos_mae"] =
          100.0 * (1.0 - est.e_c_pos.mae / base.e_c_pos.mae);
      out.improvements[pre + "e_c_neg_mae"] =
          100.0 * (1.0 - est.e_c_neg.mae / base.e_c_neg.mae);
    }
  }
  return out;
}

}  // namespace battkit
