#include "battkit/lmi.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

namespace battkit {

namespace {

struct SymBasis {
  std::vector<std::pair<Eigen::Index, Eigen::Index>> idx;
  explicit SymBasis(Eigen::Index n) {
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = i; j < n; ++j) idx.emplace_back(i, j);
  }
  Eigen::Index size() const { return Eigen::Index(idx.size()); }
};

Eigen::MatrixXd unpack_sym(const SymBasis& basis, const Eigen::VectorXd& th,
                           Eigen::Index n) {
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index a = 0; a < basis.size(); ++a) {
    const auto [i, j] = basis.idx[a];
    P(i, j) = th[a];
    P(j, i) = th[a];
  }
  return P;
}

double min_eig(const Eigen::MatrixXd& S) {
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(
             S, Eigen::EigenvaluesOnly)
      .eigenvalues()
      .minCoeff();
}

double max_eig(const Eigen::MatrixXd& S) { return -min_eig(-S); }

}  // namespace

LmiFeasibilityResult solve_vertex_feasibility(
    const Eigen::MatrixXd& A, const std::vector<Eigen::RowVectorXd>& Cs,
    const LmiDesignOptions& opts) {
  const Eigen::Index n = A.rows();
  const int m = static_cast<int>(Cs.size());
  const SymBasis basis(n);
  const Eigen::Index nP = basis.size();
  const Eigen::Index nv = nP + n + 1;  // svec(P), W, s

  // dS/dP_a is vertex independent.
  std::vector<Eigen::MatrixXd> dS_dP(nP);
  for (Eigen::Index a = 0; a < nP; ++a) {
    Eigen::MatrixXd E = Eigen::MatrixXd::Zero(n, n);
    const auto [i, j] = basis.idx[a];
    E(i, j) = 1.0;
    E(j, i) = 1.0;
    dS_dP[a] = A.transpose() * E + E * A;
  }

  auto S_of = [&](const Eigen::MatrixXd& P, const Eigen::VectorXd& W,
                  int k) -> Eigen::MatrixXd {
    Eigen::MatrixXd S = A.transpose() * P + P * A;
    S.noalias() -= W * Cs[k];
    S.noalias() -= Cs[k].transpose() * W.transpose();
    return S;
  };

  // Same PD criterion the barrier evaluation uses, so accepted line-search
  // points are always factorable in the next iteration.
  auto strictly_feasible = [&](const Eigen::VectorXd& th) -> bool {
    const Eigen::MatrixXd P = unpack_sym(basis, th.head(nP), n);
    const Eigen::VectorXd W = th.segment(nP, n);
    const double s = th[nv - 1];
    if (opts.gain_ball * opts.gain_ball - W.squaredNorm() <= 0.0) return false;
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
    if (Eigen::LLT<Eigen::MatrixXd>(P - opts.p_floor * I).info() !=
        Eigen::Success) {
      return false;
    }
    if (Eigen::LLT<Eigen::MatrixXd>(opts.p_cap * I - P).info() !=
        Eigen::Success) {
      return false;
    }
    for (int k = 0; k < m; ++k) {
      if (Eigen::LLT<Eigen::MatrixXd>(s * I - S_of(P, W, k)).info() !=
          Eigen::Success) {
        return false;
      }
    }
    return true;
  };

  // Interior start: mid-range P, zero gain, generous slack.
  Eigen::VectorXd th = Eigen::VectorXd::Zero(nv);
  {
    const double p0 = 0.5 * (opts.p_floor + opts.p_cap);
    for (Eigen::Index a = 0; a < nP; ++a) {
      const auto [i, j] = basis.idx[a];
      if (i == j) th[a] = p0;
    }
    const Eigen::MatrixXd P0 = unpack_sym(basis, th.head(nP), n);
    double s0 = max_eig(A.transpose() * P0 + P0 * A);
    th[nv - 1] = s0 + 1.0 + std::abs(s0);
  }

  LmiFeasibilityResult res;
  res.P = unpack_sym(basis, th.head(nP), n);
  res.W = th.segment(nP, n);
  res.slack = th[nv - 1];

  double t = 1.0;
  double prev_outer_s = th[nv - 1];
  int total_newton = 0;
  for (int outer = 0; outer < opts.max_outer; ++outer) {
    for (int it = 0; it < opts.max_newton; ++it) {
      ++total_newton;
      const Eigen::MatrixXd P = unpack_sym(basis, th.head(nP), n);
      const Eigen::VectorXd W = th.segment(nP, n);
      const double s = th[nv - 1];

      Eigen::VectorXd grad = Eigen::VectorXd::Zero(nv);
      Eigen::MatrixXd H = Eigen::MatrixXd::Zero(nv, nv);
      grad[nv - 1] += t;  // objective t * s

      // vertex barriers -logdet(sI - S_k)
      std::vector<std::vector<Eigen::MatrixXd>> Us(m);
      for (int k = 0; k < m; ++k) {
        const Eigen::MatrixXd G = s * Eigen::MatrixXd::Identity(n, n) -
                                  S_of(P, W, k);
        Eigen::LLT<Eigen::MatrixXd> llt(G);
        if (llt.info() != Eigen::Success) {
          throw NumericalFailure("barrier left the feasible cone");
        }
        const Eigen::MatrixXd Ginv =
            llt.solve(Eigen::MatrixXd::Identity(n, n));
        auto& Uk = Us[k];
        Uk.reserve(nv);
        for (Eigen::Index a = 0; a < nP; ++a) {
          Uk.emplace_back(-Ginv * dS_dP[a]);  // dG = -dS
        }
        for (Eigen::Index w = 0; w < n; ++w) {
          Eigen::MatrixXd dS = Eigen::MatrixXd::Zero(n, n);
          dS.row(w) -= Cs[k];
          dS.col(w) -= Cs[k].transpose();
          Uk.emplace_back(-Ginv * dS);
        }
        Uk.emplace_back(Ginv);  // dG/ds = I
        for (Eigen::Index a = 0; a < nv; ++a) {
          grad[a] += -Uk[a].trace();
          for (Eigen::Index b = a; b < nv; ++b) {
            const double v = (Uk[a].array() * Uk[b].transpose().array()).sum();
            H(a, b) += v;
            if (b != a) H(b, a) += v;
          }
        }
      }

      // P window barriers
      {
        const Eigen::MatrixXd G1 =
            P - opts.p_floor * Eigen::MatrixXd::Identity(n, n);
        const Eigen::MatrixXd G2 =
            opts.p_cap * Eigen::MatrixXd::Identity(n, n) - P;
        Eigen::LLT<Eigen::MatrixXd> l1(G1), l2(G2);
        if (l1.info() != Eigen::Success || l2.info() != Eigen::Success) {
          throw NumericalFailure("P window barrier violated");
        }
        const Eigen::MatrixXd G1i = l1.solve(Eigen::MatrixXd::Identity(n, n));
        const Eigen::MatrixXd G2i = l2.solve(Eigen::MatrixXd::Identity(n, n));
        std::vector<Eigen::MatrixXd> U1(nP), U2(nP);
        for (Eigen::Index a = 0; a < nP; ++a) {
          Eigen::MatrixXd E = Eigen::MatrixXd::Zero(n, n);
          const auto [i, j] = basis.idx[a];
          E(i, j) = 1.0;
          E(j, i) = 1.0;
          U1[a] = G1i * E;
          U2[a] = G2i * (-E);
          grad[a] += -U1[a].trace() - U2[a].trace();
        }
        for (Eigen::Index a = 0; a < nP; ++a) {
          for (Eigen::Index b = a; b < nP; ++b) {
            const double v =
                (U1[a].array() * U1[b].transpose().array()).sum() +
                (U2[a].array() * U2[b].transpose().array()).sum();
            H(a, b) += v;
            if (b != a) H(b, a) += v;
          }
        }
      }

      // gain ball barrier -log(wmax^2 - |W|^2)
      {
        const double g = opts.gain_ball * opts.gain_ball - W.squaredNorm();
        grad.segment(nP, n) += 2.0 * W / g;
        H.block(nP, nP, n, n) +=
            2.0 / g * Eigen::MatrixXd::Identity(n, n) +
            4.0 / (g * g) * W * W.transpose();
      }

      Eigen::VectorXd dth =
          (H + 1e-13 * Eigen::MatrixXd::Identity(nv, nv)).ldlt().solve(-grad);
      double step = 1.0;
      while (step > 1e-14 && !strictly_feasible(th + step * dth)) step *= 0.5;
      if (step <= 1e-14) break;
      th += step * dth;
      if (dth.norm() * step < 1e-11 * std::max(1.0, th.norm())) break;
    }

    const double s_now = th[nv - 1];
    res.P = unpack_sym(basis, th.head(nP), n);
    res.W = th.segment(nP, n);
    res.slack = s_now;
    res.newton_iterations = total_newton;
    if (s_now <= -opts.margin_target) break;
    if (outer > 8 && prev_outer_s - s_now < 1e-14 * std::abs(s_now) + 1e-300) {
      break;  // central path flattened out
    }
    prev_outer_s = s_now;
    t *= 6.0;
  }
  res.feasible = res.slack < -opts.feasibility_tol;
  return res;
}

}  // namespace battkit
