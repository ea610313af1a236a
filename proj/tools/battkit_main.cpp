// battkit command line: builds corrected single-particle cell models, designs
// and verifies polytopic observers, and runs estimation experiments against
// a fine-grid diffusion oracle.

#include <CLI11.hpp>
#include <cstring>
#include <span>
#include <filesystem>
#include <iostream>

#include "battkit/cell.hpp"
#include "battkit/io.hpp"
#include "battkit/observer.hpp"
#include "battkit/sim.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using namespace battkit;
using nlohmann::ordered_json;

namespace {

struct ToolConfig {
  CellParams params;
  OcvCurve ocv_pos, ocv_neg;
  GridScheme scheme = GridScheme::UniformVolume;
  OracleSpec oracle;
  CurrentProfile profile;
  NoiseSpec noise;
  CampaignConfig campaign;
  double dt_model = 0.1;
  double initial_soc = 100.0;
  double active_window_end = 3600.0;
  bool q_from_initial_soc = true;
  std::string out_dir = "out";
  std::uint64_t seed = 42;
  std::uint64_t config_hash = 0;
};

double jget(const nlohmann::json& j, const char* key, double fallback) {
  return j.contains(key) ? j.at(key).get<double>() : fallback;
}

ToolConfig load_config(const std::string& path, std::uint64_t seed_override,
                       bool has_seed_override,
                       double current_gain_override = 0.0) {
  const std::string text = read_text_file(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const std::exception& e) {
    throw FormatError(path + ": invalid JSON: " + e.what());
  }
  ToolConfig cfg;
  cfg.config_hash = fnv1a(text);
  try {
  const fs::path base = fs::path(path).parent_path();
  auto resolve = [&](const std::string& p) {
    const fs::path fp(p);
    return fp.is_absolute() ? fp.string() : (base / fp).string();
  };

  if (j.contains("params")) {
    cfg.params = load_params_file(resolve(j.at("params")));
  } else {
    cfg.params = default_cell_params();
  }
  cfg.ocv_pos = j.contains("ocv_pos")
                    ? load_ocv_csv(resolve(j.at("ocv_pos")))
                    : canned_ocv_pos();
  cfg.ocv_neg = j.contains("ocv_neg")
                    ? load_ocv_csv(resolve(j.at("ocv_neg")))
                    : canned_ocv_neg();

  if (j.contains("grid")) {
    const auto& g = j.at("grid");
    cfg.params.n_neg = int(jget(g, "n_neg", cfg.params.n_neg));
    cfg.params.n_pos = int(jget(g, "n_pos", cfg.params.n_pos));
    const std::string scheme = g.value("scheme", "uniform-volume");
    if (scheme == "uniform-volume") {
      cfg.scheme = GridScheme::UniformVolume;
    } else if (scheme == "uniform-radius") {
      cfg.scheme = GridScheme::UniformRadius;
    } else {
      throw FormatError(path + ": unknown grid scheme '" + scheme + "'");
    }
  }
  if (cfg.params.n_neg < 2 || cfg.params.n_pos < 2) {
    throw FormatError(path + ": sample counts must be at least 2");
  }

  if (j.contains("oracle")) {
    const auto& o = j.at("oracle");
    cfg.oracle.n_ref = int(jget(o, "n_ref", cfg.oracle.n_ref));
    cfg.oracle.dt = jget(o, "dt", cfg.oracle.dt);
    cfg.oracle.sample_stride =
        int(jget(o, "sample_stride", cfg.oracle.sample_stride));
  }

  cfg.seed = j.value("seed", std::uint64_t(42));
  if (has_seed_override) cfg.seed = seed_override;

  if (j.contains("profile")) {
    const auto& p = j.at("profile");
    const std::string kind = p.value("kind", "synthetic-phev");
    const double horizon = jget(p, "horizon", 4500.0);
    if (kind == "constant") {
      cfg.profile = constant_profile(jget(p, "amps", 6.0), horizon);
    } else if (kind == "synthetic-phev") {
      const std::uint64_t seed = p.contains("seed") && !has_seed_override
                                     ? p.at("seed").get<std::uint64_t>()
                                     : cfg.seed;
      cfg.profile = synthetic_phev(
          seed, horizon, jget(p, "one_c_amps", cfg.params.cell_capacity));
    } else if (kind == "csv") {
      const double gain = current_gain_override > 0.0
                              ? current_gain_override
                              : jget(p, "current_gain", 1.0);
      cfg.profile = load_current_csv(resolve(p.at("path")), gain);
    } else {
      throw FormatError(path + ": unknown profile kind '" + kind + "'");
    }
  } else {
    cfg.profile =
        synthetic_phev(cfg.seed, 4500.0, cfg.params.cell_capacity);
  }

  if (j.contains("noise")) {
    const auto& n = j.at("noise");
    cfg.noise.bias_current = n.value("bias_current", false);
    cfg.noise.current_amp = jget(n, "current_amp", cfg.noise.current_amp);
    cfg.noise.current_omega =
        jget(n, "current_omega", cfg.noise.current_omega);
    cfg.noise.bias_voltage = n.value("bias_voltage", false);
    cfg.noise.voltage_amp = jget(n, "voltage_amp", cfg.noise.voltage_amp);
    cfg.noise.voltage_omega =
        jget(n, "voltage_omega", cfg.noise.voltage_omega);
  }

  cfg.campaign = default_campaign_config();
  cfg.campaign.noise = cfg.noise;
  if (j.contains("campaign")) {
    const auto& c = j.at("campaign");
    if (c.contains("initial_soc_estimates")) {
      cfg.campaign.initial_soc_estimates =
          c.at("initial_soc_estimates").get<std::vector<double>>();
    }
    if (c.contains("gain_scales")) {
      cfg.campaign.gain_scales =
          c.at("gain_scales").get<std::vector<double>>();
    }
    cfg.campaign.true_initial_soc =
        jget(c, "true_initial_soc", cfg.campaign.true_initial_soc);
    cfg.campaign.dt = jget(c, "dt", cfg.campaign.dt);
    cfg.campaign.sample_stride =
        int(jget(c, "sample_stride", cfg.campaign.sample_stride));
    cfg.campaign.oracle_plant = c.value("oracle_plant", true);
    cfg.campaign.active_window_end =
        jget(c, "active_window_end", cfg.campaign.active_window_end);
    cfg.campaign.threads = int(jget(c, "threads", 0));
  }
  cfg.campaign.oracle = cfg.oracle;

  cfg.dt_model = jget(j, "dt_model", cfg.dt_model);
  cfg.initial_soc = jget(j, "initial_soc", cfg.initial_soc);
  cfg.active_window_end =
      jget(j, "active_window_end", cfg.active_window_end);
  cfg.campaign.active_window_end = cfg.active_window_end;
  cfg.campaign.true_initial_soc = cfg.initial_soc;
  const std::string q_mode = j.value("q_mode", "initial-soc");
  if (q_mode == "initial-soc") {
    cfg.q_from_initial_soc = true;
  } else if (q_mode == "table") {
    cfg.q_from_initial_soc = false;
  } else {
    throw FormatError(path + ": q_mode must be 'initial-soc' or 'table'");
  }
  cfg.out_dir = j.value("out_dir", std::string("out"));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path + ": " + e.what());
  }
  return cfg;
}

CellModel build_model(const ToolConfig& cfg) {
  ElectrodeBlock neg = make_electrode_block(cfg.params.neg, cfg.params.n_neg,
                                            cfg.scheme, cfg.ocv_neg,
                                            cfg.params);
  ElectrodeBlock pos = make_electrode_block(cfg.params.pos, cfg.params.n_pos,
                                            cfg.scheme, cfg.ocv_pos,
                                            cfg.params);
  const double q = cfg.q_from_initial_soc
                       ? lithium_at_equilibrium(neg, pos, cfg.initial_soc)
                       : cfg.params.lithium_quantity;
  return assemble_cell(std::move(neg), std::move(pos), q, cfg.params);
}

ordered_json metrics_json(const Metrics& m) {
  return ordered_json{{"MAE", m.mae}, {"RMSE", m.rmse}, {"samples", m.samples}};
}

int cmd_simulate(const ToolConfig& cfg, const std::string& out_dir) {
  const CellModel model = build_model(cfg);
  fs::create_directories(out_dir);
  const std::string prov = provenance_line(cfg.config_hash, cfg.seed);

  const ComparisonTraces out =
      compare_model_to_oracle(model, cfg.profile, cfg.initial_soc,
                              cfg.dt_model, cfg.oracle,
                              cfg.active_window_end);

  std::vector<double> current;
  current.reserve(out.times.size());
  for (double t : out.times) current.push_back(cfg.profile(t));
  write_result_csv(
      (fs::path(out_dir) / "simulate_traces.csv").string(),
      {"time_s", "current_A", "voltage_uncorrected_V", "voltage_corrected_V",
       "voltage_oracle_V", "surf_pos_uncorrected_mol_m3",
       "surf_pos_corrected_mol_m3", "surf_pos_oracle_mol_m3",
       "surf_neg_uncorrected_mol_m3", "surf_neg_corrected_mol_m3",
       "surf_neg_oracle_mol_m3"},
      {&out.times, &current, &out.y_uncorrected, &out.y_corrected,
       &out.y_oracle, &out.surf_pos_unc, &out.surf_pos_cor,
       &out.surf_pos_oracle, &out.surf_neg_unc, &out.surf_neg_cor,
       &out.surf_neg_oracle},
      prov);

  ordered_json j;
  j["provenance"] = prov;
  j["windows"] = {{"full", {0.0, cfg.profile.horizon}},
                  {"active", {0.0, cfg.active_window_end}}};
  for (const auto& [key, m] : out.metrics) j["metrics"][key] = metrics_json(m);
  for (const auto& [key, v] : out.improvements_percent) {
    j["improvement_percent"][key] = v;
  }
  write_text_file((fs::path(out_dir) / "simulate_metrics.json").string(),
                  j.dump(2) + "\n");
  // soft physical-range check on the surface traces (warning, not error)
  long range_hits = 0;
  for (double v : out.surf_pos_cor) {
    if (v < 0.0 || v > cfg.params.pos.c_max) ++range_hits;
  }
  for (double v : out.surf_neg_cor) {
    if (v < 0.0 || v > cfg.params.neg.c_max) ++range_hits;
  }
  if (range_hits > 0) {
    std::cerr << "warning: " << range_hits
              << " surface samples outside [0, c_max]\n";
  }

  std::cout << "voltage MAE full-window [mV]: uncorrected "
            << out.metrics.at("voltage_uncorrected_mV/full").mae
            << ", corrected "
            << out.metrics.at("voltage_corrected_mV/full").mae << "\n";
  std::cout << "wrote " << out_dir << "/simulate_traces.csv and metrics\n";
  return 0;
}

int cmd_design(const ToolConfig& cfg, const std::string& out_dir) {
  const CellModel model = build_model(cfg);
  fs::create_directories(out_dir);
  const std::string prov = provenance_line(cfg.config_hash, cfg.seed);
  const ObserverDesign d = design_observer(model);
  write_text_file((fs::path(out_dir) / "design.json").string(),
                  design_to_json(d, prov) + "\n");
  std::cout << "design feasible: vertex margin " << d.vertex_margin
            << ", eps " << d.eps << ", mu_w " << d.mu_w << ", mu_v "
            << d.mu_v << "\n";
  for (std::size_t i = 0; i < d.certificate.vertices.size(); ++i) {
    const auto& v = d.certificate.vertices[i];
    std::cout << "vertex " << i + 1 << ": balanced max eig "
              << v.max_eigenvalue << " (scale " << v.scale << ")\n";
  }
  std::cout << "wrote " << out_dir << "/design.json\n";
  return 0;
}

int cmd_estimate(const ToolConfig& cfg, const std::string& design_path,
                 const std::string& out_dir, double gain_scale_override) {
  const CellModel model = build_model(cfg);
  fs::create_directories(out_dir);
  const std::string prov = provenance_line(cfg.config_hash, cfg.seed);
  const ObserverDesign d =
      design_from_json(read_text_file(design_path), model);

  CampaignConfig campaign = cfg.campaign;
  if (gain_scale_override > 0.0) {
    campaign.gain_scales = {gain_scale_override};
  }

  const fs::path trace_dir = fs::path(out_dir) / "traces";
  fs::create_directories(trace_dir);
  TraceSink sink = [&](const RunTrace& tr) {
    char name[128];
    std::snprintf(name, sizeof name, "run_g%g_soc%g_%s.csv", tr.gain_scale,
                  tr.initial_soc_estimate, tr.estimator.c_str());
    for (char& ch : std::span(name, std::strlen(name))) {
      if (ch == '+') ch = '_';
    }
    std::vector<std::string> cols = {"time_s",    "soc_true_pct",
                                     "soc_est_pct", "e_soc_pct",
                                     "y_true_V",  "y_est_V",
                                     "e_c_pos_pct", "e_c_neg_pct"};
    std::vector<const std::vector<double>*> data = {
        &tr.t,      &tr.soc_true, &tr.soc_est, &tr.e_soc,
        &tr.y_true, &tr.y_est,    &tr.e_c_pos, &tr.e_c_neg};
    std::vector<std::vector<double>> conc_cols;
    for (Eigen::Index j = 0; j < tr.c_est_neg.cols(); ++j) {
      cols.push_back("c_est_neg_" + std::to_string(j + 1));
      conc_cols.emplace_back(tr.c_est_neg.col(j).data(),
                             tr.c_est_neg.col(j).data() + tr.c_est_neg.rows());
    }
    for (Eigen::Index j = 0; j < tr.c_est_pos.cols(); ++j) {
      cols.push_back("c_est_pos_" + std::to_string(j + 1));
      conc_cols.emplace_back(tr.c_est_pos.col(j).data(),
                             tr.c_est_pos.col(j).data() + tr.c_est_pos.rows());
    }
    for (const auto& v : conc_cols) data.push_back(&v);
    write_result_csv((trace_dir / name).string(), cols, data, prov);
  };
  const CampaignResult res =
      run_campaign(model, d, cfg.profile, campaign, sink);

  ordered_json j;
  j["provenance"] = prov;
  j["sweep"] = {{"initial_soc_estimates", campaign.initial_soc_estimates},
                {"gain_scales", campaign.gain_scales},
                {"estimators",
                 {"uncorrected", "corrected", "corrected+chat"}}};
  for (const auto& sm : res.scenarios) {
    ordered_json row;
    row["gain_scale"] = sm.gain_scale;
    row["initial_soc_estimate"] = sm.initial_soc_estimate;
    row["estimator"] = sm.estimator;
    row["e_soc"] = metrics_json(sm.e_soc);
    row["e_c_pos"] = metrics_json(sm.e_c_pos);
    row["e_c_neg"] = metrics_json(sm.e_c_neg);
    j["scenarios"].push_back(row);
  }
  for (const auto& [key, sm] : res.averages) {
    j["averages"][key] = {{"e_soc", metrics_json(sm.e_soc)},
                          {"e_c_pos", metrics_json(sm.e_c_pos)},
                          {"e_c_neg", metrics_json(sm.e_c_neg)}};
  }
  for (const auto& [key, v] : res.improvements) {
    j["improvement_percent"][key] = v;
  }
  write_text_file((fs::path(out_dir) / "estimate_metrics.json").string(),
                  j.dump(2) + "\n");
  std::cout << "campaign finished: " << res.scenarios.size()
            << " scenario rows\n";
  for (const auto& [key, v] : res.improvements) {
    if (key.find("e_soc_mae") != std::string::npos) {
      std::cout << "  " << key << ": " << v << "%\n";
    }
  }
  std::cout << "wrote " << out_dir << "/estimate_metrics.json\n";
  return 0;
}

int cmd_ingest(const std::string& current_path,
               const std::string& voltage_path, double current_gain,
               double q_cell, double soc0, const std::string& out_dir,
               std::uint64_t seed) {
  fs::create_directories(out_dir);
  const CurrentProfile p = load_current_csv(current_path, current_gain);
  const std::string prov =
      provenance_line(fnv1a(read_text_file(current_path)), seed);
  write_current_csv(p, (fs::path(out_dir) / "current_validated.csv").string(),
                    prov);

  ordered_json j;
  j["provenance"] = prov;
  j["samples"] = p.knots.size();
  j["horizon_s"] = p.horizon;
  j["current_gain"] = current_gain;
  j["charge_integral_As"] = p.integral(p.horizon);
  std::vector<double> ts;
  for (double t = 0.0; t <= p.horizon; t += std::max(1.0, p.horizon / 2000.0)) {
    ts.push_back(t);
  }
  const std::vector<double> soc = coulomb_soc(p, q_cell, soc0, ts);
  j["coulomb_soc_percent"] = {{"initial", soc.front()},
                              {"final", soc.back()}};
  write_result_csv((fs::path(out_dir) / "coulomb_soc.csv").string(),
                   {"time_s", "soc_percent"}, {&ts, &soc}, prov);

  if (!voltage_path.empty()) {
    // validated pass-through with the same schema checks as current files
    const std::string text = read_text_file(voltage_path);
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    bool header = false;
    double prev_t = -1.0;
    std::vector<double> vt, vv;
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty() && line[0] == '#') continue;
      if (!header) {
        std::string compact;
        for (char ch : line) {
          if (!isspace(static_cast<unsigned char>(ch))) compact += ch;
        }
        if (compact != "time_s,voltage_V") {
          throw FormatError(voltage_path + ":" + std::to_string(lineno) +
                            ": expected header 'time_s,voltage_V'");
        }
        header = true;
        continue;
      }
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      std::istringstream ss(line);
      std::string a, b;
      if (!std::getline(ss, a, ',') || !std::getline(ss, b)) {
        throw FormatError(voltage_path + ":" + std::to_string(lineno) +
                          ": expected two columns");
      }
      const double tv = std::stod(a);
      if (tv <= prev_t) {
        throw FormatError(voltage_path + ":" + std::to_string(lineno) +
                          ": time samples must increase strictly");
      }
      prev_t = tv;
      vt.push_back(tv);
      vv.push_back(std::stod(b));
    }
    if (!header) throw FormatError(voltage_path + ": missing header");
    write_result_csv((fs::path(out_dir) / "voltage_validated.csv").string(),
                     {"time_s", "voltage_V"}, {&vt, &vv}, prov);
    j["voltage_samples"] = vt.size();
  }
  write_text_file((fs::path(out_dir) / "ingest_summary.json").string(),
                  j.dump(2) + "\n");
  std::cout << "ingested " << p.knots.size() << " current samples, wrote "
            << out_dir << "\n";
  return 0;
}

int cmd_export(const std::string& out_dir) {
  fs::create_directories(out_dir);
  const std::string prov = provenance_line(0, 0);
  write_ocv_csv(canned_ocv_pos(), (fs::path(out_dir) / "ocv_pos.csv").string(),
                prov);
  write_ocv_csv(canned_ocv_neg(), (fs::path(out_dir) / "ocv_neg.csv").string(),
                prov);
  write_text_file((fs::path(out_dir) / "params.txt").string(),
                  serialize_params(default_cell_params()));
  ordered_json j;
  j["params"] = "params.txt";
  j["ocv_pos"] = "ocv_pos.csv";
  j["ocv_neg"] = "ocv_neg.csv";
  j["grid"] = {{"n_neg", 4}, {"n_pos", 4}, {"scheme", "uniform-volume"}};
  j["oracle"] = {{"n_ref", 400}, {"dt", 0.5}, {"sample_stride", 2}};
  j["profile"] = {{"kind", "synthetic-phev"}, {"horizon", 4500.0},
                  {"one_c_amps", 6.0}, {"seed", 42}};
  j["noise"] = {{"bias_current", true}, {"bias_voltage", true}};
  j["campaign"] = {{"gain_scales", {1.0, 10.0, 0.1}},
                   {"oracle_plant", true},
                   {"dt", 0.1},
                   {"sample_stride", 10}};
  j["initial_soc"] = 100.0;
  j["dt_model"] = 0.1;
  j["active_window_end"] = 3600.0;
  j["q_mode"] = "initial-soc";
  write_text_file((fs::path(out_dir) / "config.json").string(),
                  j.dump(2) + "\n");
  std::cout << "wrote default dataset to " << out_dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"battkit: corrected single-particle battery models and "
               "polytopic state observers"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand

  std::string config_path, out_flag, design_path, current_path, voltage_path;
  std::uint64_t seed = 0;
  bool has_seed = false;
  double gain_scale = 0.0, current_gain = 0.0, q_cell = 6.0, soc0 = 100.0;
  std::string oracle_flag;

  app.add_option("--seed", seed, "seed override for synthetic profiles")
      ->each([&](const std::string&) { has_seed = true; });
  app.add_option("--out", out_flag, "output directory override");
  app.add_option("--gain-scale", gain_scale,
                 "single gain scale for the estimate sweep");
  app.add_option("--oracle", oracle_flag,
                 "plant truth source for estimate: model|pde");
  app.add_option("--current-gain", current_gain,
                 "multiplicative correction for ingested current");

  CLI::App* sim = app.add_subcommand(
      "simulate", "compare corrected/uncorrected model with the oracle");
  sim->add_option("--config", config_path, "config JSON")->required();
  CLI::App* des =
      app.add_subcommand("design", "synthesize and certify an observer gain");
  des->add_option("--config", config_path, "config JSON")->required();
  CLI::App* est = app.add_subcommand(
      "estimate", "run the estimation campaign with a verified design");
  est->add_option("--config", config_path, "config JSON")->required();
  est->add_option("--design", design_path, "design JSON")->required();
  CLI::App* ing =
      app.add_subcommand("ingest", "validate measured current/voltage CSVs");
  ing->add_option("--current", current_path, "current CSV")->required();
  ing->add_option("--voltage", voltage_path, "voltage CSV");
  ing->add_option("--q-cell", q_cell, "capacity for coulomb counting [Ah]");
  ing->add_option("--soc0", soc0, "initial SOC for coulomb counting [%]");
  CLI::App* exp = app.add_subcommand(
      "export", "write the built-in OCV tables, parameters and config");

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand(exp)) {
      return cmd_export(out_flag.empty() ? "battkit_data" : out_flag);
    }
    if (app.got_subcommand(ing)) {
      return cmd_ingest(current_path, voltage_path,
                        current_gain > 0.0 ? current_gain : 1.0, q_cell,
                        soc0, out_flag.empty() ? "ingest_out" : out_flag,
                        seed);
    }
    ToolConfig cfg = load_config(config_path, seed, has_seed, current_gain);
    if (!oracle_flag.empty()) {
      if (oracle_flag == "model") {
        cfg.campaign.oracle_plant = false;
      } else if (oracle_flag == "pde") {
        cfg.campaign.oracle_plant = true;
      } else {
        throw FormatError("--oracle must be 'model' or 'pde'");
      }
    }
    const std::string out_dir = out_flag.empty() ? cfg.out_dir : out_flag;
    if (app.got_subcommand(sim)) return cmd_simulate(cfg, out_dir);
    if (app.got_subcommand(des)) return cmd_design(cfg, out_dir);
    if (app.got_subcommand(est)) {
      return cmd_estimate(cfg, design_path, out_dir, gain_scale);
    }
    std::cerr << "no subcommand\n";
    return 2;
  } catch (const DesignFailure& e) {
    std::cerr << "design infeasible: " << e.what() << "\n";
    return 3;
  } catch (const FormatError& e) {
    std::cerr << "config/input error: " << e.what() << "\n";
    return 2;
  } catch (const InvalidGridError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const InputError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "runtime failure: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "runtime failure: " << e.what() << "\n";
    return 1;
  }
}
