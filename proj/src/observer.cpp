#include "battkit/observer.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <cstring>

#include "json.hpp"

namespace battkit {

PolytopeVertices build_vertices(const CellModel& model) {
  const OcvCurve& ocv_pos = model.block(Side::Pos).ocv;
  const OcvCurve& ocv_neg = model.block(Side::Neg).ocv;
  const double cp[2] = {ocv_pos.slope_min(), ocv_pos.slope_max()};
  const double cn[2] = {ocv_neg.slope_min(), ocv_neg.slope_max()};

  const Eigen::RowVectorXd& Hpc = model.H_pos_cor();
  const Eigen::RowVectorXd& Hnc = model.H_neg_cor();
  const Eigen::RowVectorXd& Hp = model.H_pos();
  const Eigen::RowVectorXd& Hn = model.H_neg();

  PolytopeVertices v;
  int k = 0;
  for (int b = 0; b < 2; ++b) {      // neg slope index (slow)
    for (int a = 0; a < 2; ++a) {    // pos slope index (fast)
      v.C[k] = cp[a] * Hpc - cn[b] * Hnc;
      v.C_delta[k] = cp[a] * (Hp - Hpc) + cn[b] * (Hnc - Hn);
      ++k;
    }
  }
  return v;
}

std::uint64_t vertex_hash(const PolytopeVertices& v) {
  std::uint64_t h = 1469598103934665603ull;  // FNV-1a
  auto eat = [&h](const Eigen::RowVectorXd& row) {
    for (Eigen::Index i = 0; i < row.size(); ++i) {
      std::uint64_t bits;
      static_assert(sizeof(bits) == sizeof(double));
      std::memcpy(&bits, &row[i], sizeof(bits));
      for (int b = 0; b < 8; ++b) {
        h ^= (bits >> (8 * b)) & 0xffu;
        h *= 1099511628211ull;
      }
    }
  };
  for (const auto& row : v.C) eat(row);
  for (const auto& row : v.C_delta) eat(row);
  return h;
}

LmiCertificate verify_lmi(const Eigen::MatrixXd& A, const Eigen::VectorXd& E,
                          const std::array<Eigen::RowVectorXd, 4>& C,
                          const Eigen::VectorXd& L, const Eigen::MatrixXd& P,
                          double eps, double mu_w, double mu_v) {
  if (!P.isApprox(P.transpose(), 1e-10)) {
    throw InputError("verify_lmi: P must be symmetric");
  }
  const Eigen::Index n = A.rows();
  LmiCertificate cert;
  cert.vertices.reserve(C.size());
  const Eigen::VectorXd PE = P * E;
  const Eigen::VectorXd PL = P * L;
  for (const auto& Ci : C) {
    const Eigen::MatrixXd Acl = A - L * Ci;
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n + 2, n + 2);
    M.topLeftCorner(n, n) = Acl.transpose() * P + P * Acl +
                            eps * Eigen::MatrixXd::Identity(n, n);
    M.block(0, n, n, 1) = PE;
    M.block(n, 0, 1, n) = PE.transpose();
    M.block(0, n + 1, n, 1) = -PL;
    M.block(n + 1, 0, 1, n) = -PL.transpose();
    M(n, n) = -mu_w;
    M(n + 1, n + 1) = -mu_v;

    LmiVertexCheck chk;
    {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
          M, Eigen::EigenvaluesOnly);
      chk.raw_max_eigenvalue = es.eigenvalues().maxCoeff();
      chk.raw_scale = M.norm();
    }
    // Congruence balancing: the raw block mixes Lyapunov-sized entries with
    // the mu diagonal, which can differ by many orders of magnitude; the
    // balanced form has the same definiteness with a meaningful noise floor.
    Eigen::VectorXd d = Eigen::VectorXd::Ones(n + 2);
    const double h_norm = M.topLeftCorner(n, n).norm();
    d.head(n).setConstant(h_norm > 0.0 ? 1.0 / std::sqrt(h_norm) : 1.0);
    d[n] = mu_w > 0.0 ? 1.0 / std::sqrt(mu_w) : 1.0;
    d[n + 1] = mu_v > 0.0 ? 1.0 / std::sqrt(mu_v) : 1.0;
    const Eigen::MatrixXd Mb = d.asDiagonal() * M * d.asDiagonal();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> esb(Mb,
                                                       Eigen::EigenvaluesOnly);
    chk.max_eigenvalue = esb.eigenvalues().maxCoeff();
    chk.scale = Mb.norm();
    cert.vertices.push_back(chk);
  }
  cert.pass = true;
  for (const auto& v : cert.vertices) cert.pass = cert.pass && v.negative();
  return cert;
}

ObserverDesign design_gain(const Eigen::MatrixXd& A, const Eigen::VectorXd& E,
                           const PolytopeVertices& vertices,
                           const LmiDesignOptions& opts) {
  const Eigen::Index n = A.rows();
  Eigen::VectorXd scale = opts.state_scale;
  if (scale.size() == 0) scale = Eigen::VectorXd::Ones(n);
  if (scale.size() != n || (scale.array() <= 0.0).any()) {
    throw InputError("design_gain: state scale must be positive, length N");
  }

  const Eigen::MatrixXd Ad0 =
      scale.asDiagonal() * A * scale.cwiseInverse().asDiagonal();
  const double t0 = opts.time_scale > 0.0
                        ? opts.time_scale
                        : 1.0 / Ad0.cwiseAbs().maxCoeff();
  const Eigen::MatrixXd Ad = t0 * Ad0;
  std::vector<Eigen::RowVectorXd> Cd;
  Cd.reserve(vertices.C.size());
  for (const auto& Ci : vertices.C) {
    Cd.emplace_back(Ci.cwiseQuotient(scale.transpose()));
  }

  const LmiFeasibilityResult fr = solve_vertex_feasibility(Ad, Cd, opts);
  if (!fr.feasible) {
    throw DesignFailure(
        "observer design infeasible: best vertex slack " +
            std::to_string(fr.slack) + " (target < -" +
            std::to_string(opts.feasibility_tol) + ") after " +
            std::to_string(fr.newton_iterations) + " Newton steps",
        fr.slack);
  }

  ObserverDesign d;
  d.E = E;
  const Eigen::VectorXd Ld = fr.P.ldlt().solve(fr.W);
  d.L = scale.cwiseInverse().asDiagonal() * Ld / t0;
  d.P = scale.asDiagonal() * fr.P * scale.asDiagonal();

  // Raw-coordinate vertex margin, then the Schur split for eps, mu_w, mu_v:
  // H_i <= -beta I, eps = beta/4 and mu_w, mu_v large enough that the rank-1
  // noise couplings eat at most beta/8 each.
  double beta = 1e300;
  for (const auto& Ci : vertices.C) {
    const Eigen::MatrixXd Acl = A - d.L * Ci;
    const Eigen::MatrixXd Hi = Acl.transpose() * d.P + d.P * Acl;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Hi,
                                                      Eigen::EigenvaluesOnly);
    beta = std::min(beta, -es.eigenvalues().maxCoeff());
  }
  if (!(beta > 0.0)) {
    throw DesignFailure(
        "scaled design did not stay negative definite in raw coordinates",
        -beta);
  }
  d.vertex_margin = beta;
  d.eps = beta / 4.0;
  const double pe2 = (d.P * E).squaredNorm();
  const double pl2 = (d.P * d.L).squaredNorm();
  d.mu_w = std::max(8.0 * pe2 / beta, 1e-30);
  d.mu_v = std::max(8.0 * pl2 / beta, 1e-30);
  d.vertices_hash = vertex_hash(vertices);
  d.certificate =
      verify_lmi(A, E, vertices.C, d.L, d.P, d.eps, d.mu_w, d.mu_v);
  if (!d.certificate.pass) {
    throw DesignFailure("designed gain failed self-certification",
                        d.certificate.worst());
  }
  return d;
}

ObserverDesign design_observer(const CellModel& model, LmiDesignOptions opts) {
  if (opts.state_scale.size() == 0) {
    const Eigen::Index nn = model.block(Side::Neg).grid.sample_count();
    const Eigen::Index np = model.block(Side::Pos).grid.sample_count();
    Eigen::VectorXd s(nn - 1 + np);
    s.head(nn - 1).setConstant(1.0 / model.block(Side::Neg).params.c_max);
    s.tail(np).setConstant(1.0 / model.block(Side::Pos).params.c_max);
    opts.state_scale = s;
  }
  return design_gain(model.A(), model.B(), build_vertices(model), opts);
}

EmulationCertificate verify_emulation(
    const Eigen::MatrixXd& P, const Eigen::MatrixXd& Q_lyap,
    const Eigen::VectorXd& L,
    const std::array<Eigen::RowVectorXd, 4>& C_delta) {
  if (!P.isApprox(P.transpose(), 1e-10) ||
      !Q_lyap.isApprox(Q_lyap.transpose(), 1e-10)) {
    throw InputError("verify_emulation: P and Q must be symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> q_es(Q_lyap,
                                                      Eigen::EigenvaluesOnly);
  if (q_es.eigenvalues().minCoeff() <= 0.0) {
    throw InputError("verify_emulation: Q must be positive definite");
  }
  EmulationCertificate cert;
  const Eigen::VectorXd PL = P * L;
  for (std::size_t i = 0; i < C_delta.size(); ++i) {
    const Eigen::MatrixXd M = -Q_lyap +
                              C_delta[i].transpose() * PL.transpose() +
                              PL * C_delta[i];
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M,
                                                      Eigen::EigenvaluesOnly);
    cert.margins[i] = es.eigenvalues().maxCoeff();
  }
  cert.pass = true;
  for (double m : cert.margins) cert.pass = cert.pass && (m < 0.0);
  return cert;
}

EstimateState make_estimate_state(const CellModel& model,
                                  const Eigen::VectorXd& xhat, double u,
                                  bool corrected_output) {
  EstimateState s;
  s.xhat = xhat;
  s.center_neg = model.recover_center(xhat);
  auto [cn, cp] = model.corrected_concentrations(xhat);
  s.corrected_neg = std::move(cn);
  s.corrected_pos = std::move(cp);
  s.y_hat = model.output_voltage(xhat, u, corrected_output);
  return s;
}

ObserverTrajectory simulate_observer(
    const CellModel& model, const Eigen::VectorXd& L, bool corrected_output,
    const std::function<double(double)>& u_of_t,
    const std::function<double(double)>& y_of_t, Eigen::VectorXd xhat0,
    const TimeGrid& grid, int sample_stride) {
  const Eigen::Index n = model.state_dim();
  if (xhat0.size() != n || L.size() != n) {
    throw AssemblyError("simulate_observer: dimension mismatch");
  }
  long guard_step = 0;
  auto rhs = [&](double t, const Eigen::VectorXd& xh) -> Eigen::VectorXd {
    const double u = u_of_t(t);
    const double y = y_of_t(t);
    if (!std::isfinite(u) || !std::isfinite(y)) {
      throw InputError("non-finite input sample near step " +
                       std::to_string(guard_step) + " (t = " +
                       std::to_string(t) + ")");
    }
    const double yhat = model.output_voltage(xh, u, corrected_output);
    return model.A() * xh + model.B() * u + model.K() + L * (y - yhat);
  };

  ObserverTrajectory traj;
  const int stride = std::max(1, sample_stride);
  const long n_rows = grid.steps / stride + 1 + (grid.steps % stride ? 1 : 0);
  traj.xhat.resize(n_rows, n);
  traj.times.reserve(n_rows);
  traj.times.push_back(grid.t0);
  traj.xhat.row(0) = xhat0.transpose();
  long row = 1;
  integrate_rk4(rhs, std::move(xhat0), grid,
                [&](long k, double t, const Eigen::VectorXd& xh) {
                  guard_step = k;
                  if (k % stride == 0 || k == grid.steps) {
                    traj.times.push_back(t);
                    traj.xhat.row(row++) = xh.transpose();
                  }
                });
  return traj;
}

PlantObserverTrajectory simulate_plant_observer(
    const CellModel& model, const Eigen::VectorXd& L, bool corrected_output,
    const std::function<double(double)>& u_of_t, Eigen::VectorXd x0,
    Eigen::VectorXd xhat0, const TimeGrid& grid, int sample_stride,
    const std::function<double(double)>& w_of_t,
    const std::function<double(double)>& v_of_t,
    const Eigen::VectorXd* E_override) {
  const Eigen::Index n = model.state_dim();
  if (x0.size() != n || xhat0.size() != n || L.size() != n) {
    throw AssemblyError("simulate_plant_observer: dimension mismatch");
  }
  const Eigen::VectorXd E = E_override ? *E_override : model.B();

  auto rhs = [&](double t, const Eigen::VectorXd& z) -> Eigen::VectorXd {
    const double u = u_of_t(t);
    if (!std::isfinite(u)) {
      throw InputError("non-finite current sample at t = " +
                       std::to_string(t));
    }
    const Eigen::VectorXd x = z.head(n);
    const Eigen::VectorXd xh = z.tail(n);
    const double w = w_of_t ? w_of_t(t) : 0.0;
    const double v = v_of_t ? v_of_t(t) : 0.0;
    const double y = model.output_voltage(x, u, true) + v;
    const double yhat = model.output_voltage(xh, u, corrected_output);
    Eigen::VectorXd dz(2 * n);
    dz.head(n) = model.A() * x + model.B() * u + model.K() + E * w;
    dz.tail(n) =
        model.A() * xh + model.B() * u + model.K() + L * (y - yhat);
    return dz;
  };

  PlantObserverTrajectory traj;
  const int stride = std::max(1, sample_stride);
  const long n_rows = grid.steps / stride + 1 + (grid.steps % stride ? 1 : 0);
  traj.x.resize(n_rows, n);
  traj.xhat.resize(n_rows, n);
  traj.times.reserve(n_rows);
  traj.times.push_back(grid.t0);
  traj.x.row(0) = x0.transpose();
  traj.xhat.row(0) = xhat0.transpose();
  Eigen::VectorXd z(2 * n);
  z << x0, xhat0;
  long row = 1;
  integrate_rk4(rhs, std::move(z), grid,
                [&](long k, double t, const Eigen::VectorXd& zz) {
                  if (k % stride == 0 || k == grid.steps) {
                    traj.times.push_back(t);
                    traj.x.row(row) = zz.head(n).transpose();
                    traj.xhat.row(row) = zz.tail(n).transpose();
                    ++row;
                  }
                });
  return traj;
}

std::string design_to_json(const ObserverDesign& d,
                           const std::string& provenance) {
  nlohmann::json j;
  j["format"] = "battkit-observer-design";
  j["version"] = 1;
  j["N"] = d.L.size();
  j["L"] = std::vector<double>(d.L.data(), d.L.data() + d.L.size());
  std::vector<double> prow;
  prow.reserve(d.P.size());
  for (Eigen::Index i = 0; i < d.P.rows(); ++i) {
    for (Eigen::Index k = 0; k < d.P.cols(); ++k) prow.push_back(d.P(i, k));
  }
  j["P_row_major"] = prow;
  j["eps"] = d.eps;
  j["mu_w"] = d.mu_w;
  j["mu_v"] = d.mu_v;
  j["E"] = std::vector<double>(d.E.data(), d.E.data() + d.E.size());
  j["vertex_margin"] = d.vertex_margin;
  j["vertex_hash"] = d.vertices_hash;
  if (!provenance.empty()) j["provenance"] = provenance;
  return j.dump(2);
}

ObserverDesign design_from_json(const std::string& text,
                                const CellModel& model) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const std::exception& e) {
    throw FormatError(std::string("design file is not valid JSON: ") +
                      e.what());
  }
  if (j.value("format", "") != "battkit-observer-design") {
    throw FormatError("design file has wrong format tag");
  }
  ObserverDesign d;
  const Eigen::Index n = j.at("N").get<Eigen::Index>();
  if (n != model.state_dim()) {
    throw InputError("design dimension does not match the model");
  }
  const auto lv = j.at("L").get<std::vector<double>>();
  const auto pv = j.at("P_row_major").get<std::vector<double>>();
  const auto ev = j.at("E").get<std::vector<double>>();
  if (Eigen::Index(lv.size()) != n || Eigen::Index(pv.size()) != n * n ||
      Eigen::Index(ev.size()) != n) {
    throw FormatError("design file arrays have inconsistent sizes");
  }
  d.L = Eigen::Map<const Eigen::VectorXd>(lv.data(), n);
  d.P.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index k = 0; k < n; ++k) d.P(i, k) = pv[i * n + k];
  }
  d.E = Eigen::Map<const Eigen::VectorXd>(ev.data(), n);
  d.eps = j.at("eps").get<double>();
  d.mu_w = j.at("mu_w").get<double>();
  d.mu_v = j.at("mu_v").get<double>();
  d.vertex_margin = j.value("vertex_margin", 0.0);
  d.vertices_hash = j.at("vertex_hash").get<std::uint64_t>();

  const PolytopeVertices verts = build_vertices(model);
  if (vertex_hash(verts) != d.vertices_hash) {
    throw InputError(
        "design file was built for different output vertices (hash mismatch)");
  }
  d.certificate =
      verify_lmi(model.A(), d.E, verts.C, d.L, d.P, d.eps, d.mu_w, d.mu_v);
  if (!d.certificate.pass) {
    throw DesignFailure("imported design failed re-verification",
                        d.certificate.worst());
  }
  return d;
}

}  // namespace battkit
