#pragma once

#include <Eigen/Dense>
#include <array>
#include <functional>
#include <string>
#include <vector>

#include "battkit/cell.hpp"
#include "battkit/integrate.hpp"
#include "battkit/lmi.hpp"

namespace battkit {

/// The four vertex rows of the corrected output map h_cor (C) and of the
/// difference map h - h_cor (C_delta), one per combination of the extreme
/// OCV slopes (pos slope varies fastest: 1 = (pos1, neg1), 2 = (pos2, neg1),
/// 3 = (pos1, neg2), 4 = (pos2, neg2)).
struct PolytopeVertices {
  std::array<Eigen::RowVectorXd, 4> C;
  std::array<Eigen::RowVectorXd, 4> C_delta;
};

PolytopeVertices build_vertices(const CellModel& model);

/// 64-bit content hash of the vertex rows; stored in design files so an
/// imported gain is only accepted against the vertices it was built for.
std::uint64_t vertex_hash(const PolytopeVertices& v);

struct LmiVertexCheck {
  /// Max eigenvalue of the diagonally balanced congruence of the block
  /// (sign-equivalent to the raw block; the balancing keeps the Lyapunov
  /// sub-block margin above the eigensolver noise floor of the mu entries).
  double max_eigenvalue = 0.0;
  double scale = 0.0;               ///< Frobenius norm of the balanced block
  double raw_max_eigenvalue = 0.0;  ///< of the unbalanced block, reported
  double raw_scale = 0.0;           ///< Frobenius norm of the raw block
  bool negative() const { return max_eigenvalue <= -1e-12 * scale; }
};

struct LmiCertificate {
  std::vector<LmiVertexCheck> vertices;
  bool pass = false;
  double worst() const {
    double w = -1e300;
    for (const auto& v : vertices) w = std::max(w, v.max_eigenvalue);
    return w;
  }
};

/// Evaluates the per-vertex observer block matrices
///   [ H_i + eps I   P E   -P L ]
///   [     *        -mu_w    0  ]
///   [     *          *   -mu_v ]
/// with H_i = (A - L C_i)' P + P (A - L C_i) and reports their largest
/// eigenvalues. Pass = every block at or below -1e-12 times its norm.
LmiCertificate verify_lmi(const Eigen::MatrixXd& A, const Eigen::VectorXd& E,
                          const std::array<Eigen::RowVectorXd, 4>& C,
                          const Eigen::VectorXd& L, const Eigen::MatrixXd& P,
                          double eps, double mu_w, double mu_v);

struct ObserverDesign {
  Eigen::VectorXd L;
  Eigen::MatrixXd P;
  double eps = 0.0;
  double mu_w = 0.0;
  double mu_v = 0.0;
  Eigen::VectorXd E;
  double vertex_margin = 0.0;  ///< -max_i lambda_max((A-LC_i)'P + P(A-LC_i))
  LmiCertificate certificate;
  std::uint64_t vertices_hash = 0;
};

/// Synthesizes (L, P, eps, mu_w, mu_v) for the vertex family by solving the
/// scaled feasibility program and backing out the noise gains through a
/// Schur-complement split of the block inequality. Self-certifies with
/// verify_lmi; throws DesignFailure (carrying the best slack) if the
/// program cannot be made strictly feasible.
ObserverDesign design_gain(const Eigen::MatrixXd& A, const Eigen::VectorXd& E,
                           const PolytopeVertices& vertices,
                           const LmiDesignOptions& opts);

/// Model-level wrapper: scales states by 1/c_max per electrode block, takes
/// E = B, and uses tuned default options.
ObserverDesign design_observer(const CellModel& model,
                               LmiDesignOptions opts = {});

struct EmulationCertificate {
  std::array<double, 4> margins{};  ///< lambda_max(-Q + Cd'L'P + P L Cd)
  bool pass = false;
};

/// Theorem-style emulation check: an observer certified for the plain
/// output map keeps converging with the corrected map when
/// -Q + C_delta' L' P + P L C_delta stays negative definite at all four
/// difference vertices. Reports margins; never asserts feasibility.
EmulationCertificate verify_emulation(
    const Eigen::MatrixXd& P, const Eigen::MatrixXd& Q_lyap,
    const Eigen::VectorXd& L, const std::array<Eigen::RowVectorXd, 4>& C_delta);

/// Corrected estimated concentrations (same correction as the plant side).
inline std::pair<Eigen::VectorXd, Eigen::VectorXd> correct_estimates(
    const CellModel& model, const Eigen::VectorXd& xhat) {
  return model.corrected_concentrations(xhat);
}

/// Snapshot of the estimator at one instant.
struct EstimateState {
  Eigen::VectorXd xhat;
  double center_neg = 0.0;          ///< recovered c_neg_1 estimate
  Eigen::VectorXd corrected_neg;    ///< corrected concentration estimates
  Eigen::VectorXd corrected_pos;
  double y_hat = 0.0;
};

EstimateState make_estimate_state(const CellModel& model,
                                  const Eigen::VectorXd& xhat, double u,
                                  bool corrected_output);

struct ObserverTrajectory {
  std::vector<double> times;
  Eigen::MatrixXd xhat;  ///< one row per recorded time
};

/// Integrates the observer against measured (u, y) signals. Samples are
/// validated; a non-finite u or y evaluation aborts with the offending step.
ObserverTrajectory simulate_observer(
    const CellModel& model, const Eigen::VectorXd& L, bool corrected_output,
    const std::function<double(double)>& u_of_t,
    const std::function<double(double)>& y_of_t, Eigen::VectorXd xhat0,
    const TimeGrid& grid, int sample_stride = 1);

struct PlantObserverTrajectory {
  std::vector<double> times;
  Eigen::MatrixXd x;      ///< plant rows
  Eigen::MatrixXd xhat;   ///< estimate rows
  Eigen::VectorXd error_norms() const {
    return (x - xhat).rowwise().norm();
  }
};

/// Joint plant + observer integration (simulation mode: the true state is
/// available, disturbances w, v optional). One RK4 pass over the stacked
/// system keeps the innovation consistent within each step.
PlantObserverTrajectory simulate_plant_observer(
    const CellModel& model, const Eigen::VectorXd& L, bool corrected_output,
    const std::function<double(double)>& u_of_t, Eigen::VectorXd x0,
    Eigen::VectorXd xhat0, const TimeGrid& grid, int sample_stride = 1,
    const std::function<double(double)>& w_of_t = {},
    const std::function<double(double)>& v_of_t = {},
    const Eigen::VectorXd* E_override = nullptr);

/// Design file round trip (structured JSON; L, P row-major, margins, vertex
/// hash). Import recomputes the vertices, demands a matching hash and
/// re-verifies the certificate before returning.
std::string design_to_json(const ObserverDesign& d,
                           const std::string& provenance);
ObserverDesign design_from_json(const std::string& text,
                                const CellModel& model);

}  // namespace battkit
