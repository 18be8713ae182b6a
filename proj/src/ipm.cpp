/*
   Copyright 2026 momrev authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

        http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/

#include "ipm.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>

namespace momrev::detail {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                             Eigen::RowMajor>;

// Per-block Nesterov-Todd scaling data: W = R R', W Z W = X, and both
// scaled variables equal diag(lambda).
struct Scaling {
  MatrixXd R, Rt, Rinv, RinvT;
  VectorXd lambda;
};

Scaling nt_scaling(const MatrixXd& X, const MatrixXd& Z) {
  const int n = static_cast<int>(X.rows());
  Eigen::LLT<MatrixXd> lltx(X), lltz(Z);
  if (lltx.info() != Eigen::Success || lltz.info() != Eigen::Success) {
    // near-boundary iterates can lose definiteness to roundoff; nudge
    // the spectrum before giving up
    MatrixXd Xj = X, Zj = Z;
    Xj.diagonal().array() += 1e-14 * std::max(1e-300, X.trace() / n);
    Zj.diagonal().array() += 1e-14 * std::max(1e-300, Z.trace() / n);
    lltx.compute(Xj);
    lltz.compute(Zj);
    if (lltx.info() != Eigen::Success || lltz.info() != Eigen::Success)
      throw std::runtime_error("nt_scaling: iterate lost definiteness");
  }
  MatrixXd Lx = lltx.matrixL();
  MatrixXd Lz = lltz.matrixL();
  MatrixXd M = Lz.transpose() * Lx;
  Eigen::BDCSVD<MatrixXd> svd(M, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const VectorXd sigma = svd.singularValues();
  VectorXd si = sigma.cwiseSqrt().cwiseInverse();
  Scaling s;
  s.lambda = sigma;
  s.R = Lx * svd.matrixV() * si.asDiagonal();
  s.Rt = s.R.transpose();
  // R^{-1} = sqrt(Sigma) V' Lx^{-1}
  MatrixXd Lxi = Lx.triangularView<Eigen::Lower>().solve(
      MatrixXd::Identity(n, n));
  s.Rinv = sigma.cwiseSqrt().asDiagonal() * svd.matrixV().transpose() * Lxi;
  s.RinvT = s.Rinv.transpose();
  return s;
}

// largest alpha in (0, 1] with X + alpha*dX PSD (given chol(X))
double max_step(const MatrixXd& X, const MatrixXd& dX) {
  Eigen::LLT<MatrixXd> llt(X);
  if (llt.info() != Eigen::Success) return 0.0;
  MatrixXd L = llt.matrixL();
  const int n = static_cast<int>(X.rows());
  MatrixXd T = L.triangularView<Eigen::Lower>().solve(dX);
  T = L.triangularView<Eigen::Lower>().solve(T.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (T + T.transpose()),
                                             Eigen::EigenvaluesOnly);
  const double lmin = es.eigenvalues().minCoeff();
  if (lmin >= 0) return 1.0;
  return std::min(1.0, -1.0 / lmin);
}

struct Work {
  std::vector<MatrixXd> X, Z, dX, dZ, Rd, D;
  std::vector<Scaling> sc;
  VectorXd y, f, dy, df, Rp, rf;
};

}  // namespace

int StdSdp::total_dim() const {
  int n = 0;
  for (int d : dims) n += d;
  return n;
}

StdSolution ipm_solve(const StdSdp& prob, double tol, int max_iterations) {
  const int nb = static_cast<int>(prob.dims.size());
  const int m = prob.m();
  const int nf = prob.nf();
  const int ntot = prob.total_dim();

  StdSolution sol;
  if (m == 0 || nb == 0) {
    sol.status = SolveStatus::stalled;
    sol.message = "ipm: empty problem";
    return sol;
  }

  // --- prescaling ------------------------------------------------------
  // row scales: unit Frobenius norm per constraint
  VectorXd rowscale(m);
  for (int i = 0; i < m; ++i) {
    double nrm2 = 0;
    for (int k = 0; k < nb; ++k) {
      const int n = prob.dims[k];
      nrm2 += prob.Astack[k].middleRows(static_cast<Eigen::Index>(i) * n, n)
                  .squaredNorm();
    }
    if (nf > 0) nrm2 += prob.B.row(i).squaredNorm();
    rowscale(i) = std::max(1e-12, std::sqrt(nrm2));
  }
  double cnorm = 0;
  for (int k = 0; k < nb; ++k) cnorm = std::max(cnorm, prob.C[k].cwiseAbs().maxCoeff());
  if (nf > 0 && prob.cf.size() > 0)
    cnorm = std::max(cnorm, prob.cf.cwiseAbs().maxCoeff());
  const double sC = std::max(1.0, cnorm);
  VectorXd b = prob.b.cwiseQuotient(rowscale);
  const double sb = std::max(1.0, b.cwiseAbs().maxCoeff());
  b /= sb;

  std::vector<MatrixXd> A(nb);  // scaled stacked constraints
  for (int k = 0; k < nb; ++k) {
    const int n = prob.dims[k];
    A[k] = prob.Astack[k];
    for (int i = 0; i < m; ++i)
      A[k].middleRows(static_cast<Eigen::Index>(i) * n, n) /= rowscale(i);
  }
  std::vector<MatrixXd> C(nb);
  for (int k = 0; k < nb; ++k) C[k] = prob.C[k] / sC;
  MatrixXd B;
  VectorXd cf;
  if (nf > 0) {
    B = prob.B;
    for (int i = 0; i < m; ++i) B.row(i) /= rowscale(i);
    cf = prob.cf / sC;
  }

  auto a_inner = [&](const std::vector<MatrixXd>& M) {
    VectorXd out = VectorXd::Zero(m);
    for (int k = 0; k < nb; ++k) {
      const int n = prob.dims[k];
      for (int i = 0; i < m; ++i)
        out(i) += A[k]
                      .middleRows(static_cast<Eigen::Index>(i) * n, n)
                      .cwiseProduct(M[k])
                      .sum();
    }
    return out;
  };
  auto a_adjoint = [&](const VectorXd& y, std::vector<MatrixXd>& out) {
    for (int k = 0; k < nb; ++k) {
      const int n = prob.dims[k];
      out[k].setZero(n, n);
      for (int i = 0; i < m; ++i) {
        if (y(i) == 0.0) continue;
        out[k] += y(i) * A[k].middleRows(static_cast<Eigen::Index>(i) * n, n);
      }
    }
  };

  // --- initial iterate --------------------------------------------------
  Work w;
  w.X.resize(nb);
  w.Z.resize(nb);
  w.dX.resize(nb);
  w.dZ.resize(nb);
  w.Rd.resize(nb);
  w.D.resize(nb);
  w.sc.resize(nb);
  const double s0 =
      std::max({10.0, std::sqrt(static_cast<double>(ntot)),
                b.cwiseAbs().maxCoeff()});
  for (int k = 0; k < nb; ++k) {
    w.X[k] = s0 * MatrixXd::Identity(prob.dims[k], prob.dims[k]);
    w.Z[k] = s0 * MatrixXd::Identity(prob.dims[k], prob.dims[k]);
  }
  w.y = VectorXd::Zero(m);
  w.f = VectorXd::Zero(nf);

  MatrixXd S(m, m);
  Eigen::LLT<MatrixXd> sllt;
  Eigen::LDLT<MatrixXd> saddle_ldlt;
  std::vector<RowMat> Q(nb);
  for (int k = 0; k < nb; ++k)
    Q[k].resize(m, static_cast<Eigen::Index>(prob.dims[k]) * prob.dims[k]);

  const double norm_b = 1.0 + b.norm();
  double norm_c = 1.0;
  for (int k = 0; k < nb; ++k) norm_c += C[k].squaredNorm();
  norm_c = std::sqrt(norm_c);

  double mu = 0;
  int it = 0;
  double best_gap = std::numeric_limits<double>::infinity();
  int stall_count = 0;

  auto finish = [&](SolveStatus status, const std::string& msg) {
    sol.status = status;
    sol.message = msg;
    sol.iterations = it;
    sol.X.resize(nb);
    sol.Z.resize(nb);
    for (int k = 0; k < nb; ++k) {
      sol.X[k] = sb * w.X[k];
      sol.Z[k] = sC * w.Z[k];
    }
    sol.y = VectorXd(m);
    for (int i = 0; i < m; ++i) sol.y(i) = sC * w.y(i) / rowscale(i);
    sol.f = sb * w.f;
    double pobj = 0;
    for (int k = 0; k < nb; ++k)
      pobj += prob.C[k].cwiseProduct(sol.X[k]).sum();
    if (nf > 0) pobj += prob.cf.dot(sol.f);
    sol.pobj = pobj;
    sol.dobj = prob.b.dot(sol.y);
    return sol;
  };

  for (it = 1; it <= max_iterations; ++it) {
    // residuals
    VectorXd ax = a_inner(w.X);
    w.Rp = b - ax;
    if (nf > 0) w.Rp -= B * w.f;
    a_adjoint(w.y, w.Rd);
    double rd_norm2 = 0;
    for (int k = 0; k < nb; ++k) {
      w.Rd[k] = C[k] - w.Z[k] - w.Rd[k];
      rd_norm2 += w.Rd[k].squaredNorm();
    }
    if (nf > 0) w.rf = cf - B.transpose() * w.y;

    double xz = 0;
    for (int k = 0; k < nb; ++k)
      xz += w.X[k].cwiseProduct(w.Z[k]).sum();
    mu = xz / ntot;

    double pobj = 0;
    for (int k = 0; k < nb; ++k) pobj += C[k].cwiseProduct(w.X[k]).sum();
    if (nf > 0) pobj += cf.dot(w.f);
    const double dobj = b.dot(w.y);

    const double rel_p =
        std::sqrt(w.Rp.squaredNorm() +
                  (nf > 0 ? w.rf.squaredNorm() : 0.0)) /
        norm_b;
    const double rel_d = std::sqrt(rd_norm2) / norm_c;
    const double rel_g =
        std::abs(pobj - dobj) / (1.0 + std::abs(pobj) + std::abs(dobj));
    sol.rel_primal = rel_p;
    sol.rel_dual = rel_d;
    sol.rel_gap = rel_g;

    if (std::getenv("MOMREV_IPM_VERBOSE"))
      std::fprintf(stderr,
                   "it %3d mu=%9.2e rp=%9.2e rd=%9.2e gap=%9.2e po=%12.5e "
                   "do=%12.5e\n",
                   it, mu, rel_p, rel_d, rel_g, pobj, dobj);
    if (rel_p <= tol && rel_d <= tol && rel_g <= tol)
      return finish(SolveStatus::optimal, "converged");

    // divergence and infeasibility certificates
    const double ynorm = w.y.norm();
    double xnorm = 0;
    for (int k = 0; k < nb; ++k) xnorm = std::max(xnorm, w.X[k].norm());
    if (ynorm > 1e8) {
      // (y, Z) direction with adj(y) + Z ~ 0 and b'y > 0 proves primal
      // infeasibility
      if (b.dot(w.y) > 1e-6 * ynorm && rel_d * norm_c / ynorm < 1e-6)
        return finish(SolveStatus::infeasible,
                      "dual improving ray detected");
      return finish(SolveStatus::stalled, "dual iterates diverged");
    }
    if (xnorm > 1e8) {
      if (pobj < -1e-6 * xnorm && ax.norm() / xnorm < 1e-6)
        return finish(SolveStatus::unbounded,
                      "primal improving ray detected");
      return finish(SolveStatus::stalled, "primal iterates diverged");
    }

    // NT scaling; a loss of definiteness ends with the best iterate
    try {
      for (int k = 0; k < nb; ++k) w.sc[k] = nt_scaling(w.X[k], w.Z[k]);
    } catch (const std::runtime_error& e) {
      return finish(rel_p <= 100 * tol && rel_d <= 100 * tol &&
                            rel_g <= 100 * tol
                        ? SolveStatus::near_optimal
                        : SolveStatus::stalled,
                    e.what());
    }

    // Schur complement S_ij = sum_k <R' A_i R, R' A_j R>
    S.setZero();
    for (int k = 0; k < nb; ++k) {
      const int n = prob.dims[k];
      MatrixXd P = A[k] * w.sc[k].R;  // (m*n) x n
      for (int i = 0; i < m; ++i) {
        MatrixXd Bi = w.sc[k].Rt * P.middleRows(static_cast<Eigen::Index>(i) * n, n);
        Q[k].row(i) = Eigen::Map<VectorXd>(Bi.data(), Bi.size()).transpose();
      }
      S.selfadjointView<Eigen::Lower>().rankUpdate(Q[k], 1.0);
    }
    S.triangularView<Eigen::StrictlyUpper>() =
        S.transpose().triangularView<Eigen::StrictlyUpper>();

    // factor (with escalating regularization on failure)
    double reg = 0.0;
    const double diag_mean = std::max(1e-300, S.trace() / m);
    bool factored = false;
    if (nf == 0) {
      for (int attempt = 0; attempt < 8 && !factored; ++attempt) {
        MatrixXd Sreg = S;
        if (reg > 0) Sreg.diagonal().array() += reg * diag_mean;
        sllt.compute(Sreg);
        if (sllt.info() == Eigen::Success)
          factored = true;
        else
          reg = reg == 0 ? 1e-14 : reg * 100;
      }
    } else {
      MatrixXd K(m + nf, m + nf);
      for (int attempt = 0; attempt < 8 && !factored; ++attempt) {
        K.topLeftCorner(m, m) = S;
        if (reg > 0) K.topLeftCorner(m, m).diagonal().array() += reg * diag_mean;
        K.topRightCorner(m, nf) = B;
        K.bottomLeftCorner(nf, m) = B.transpose();
        K.bottomRightCorner(nf, nf) =
            -1e-12 * diag_mean * MatrixXd::Identity(nf, nf);
        saddle_ldlt.compute(K);
        if (saddle_ldlt.info() == Eigen::Success)
          factored = true;
        else
          reg = reg == 0 ? 1e-14 : reg * 100;
      }
    }
    if (!factored)
      return finish(SolveStatus::stalled, "Schur factorization failed");

    auto recover_directions = [&]() {
      a_adjoint(w.dy, w.dZ);
      for (int k = 0; k < nb; ++k) {
        w.dZ[k] = w.Rd[k] - w.dZ[k];
        MatrixXd WdZW = w.sc[k].R * (w.sc[k].Rt * w.dZ[k] * w.sc[k].R) *
                        w.sc[k].Rt;
        w.dX[k] = w.D[k] - WdZW;
        w.dX[k] = 0.5 * (w.dX[k] + w.dX[k].transpose()).eval();
        w.dZ[k] = 0.5 * (w.dZ[k] + w.dZ[k].transpose()).eval();
      }
    };

    auto solve_direction = [&](const std::vector<MatrixXd>& G) {
      // D = R G R'
      for (int k = 0; k < nb; ++k)
        w.D[k] = w.sc[k].R * G[k] * w.sc[k].Rt;
      // r1 = Rp - A(D) + A(W Rd W)
      std::vector<MatrixXd> T(nb);
      for (int k = 0; k < nb; ++k) {
        MatrixXd inner = w.sc[k].Rt * w.Rd[k] * w.sc[k].R;
        T[k] = w.D[k] * (-1.0) + w.sc[k].R * inner * w.sc[k].Rt;
        // T = -D + W Rd W stored for a single a_inner pass
      }
      VectorXd r1 = w.Rp + a_inner(T);
      if (nf == 0) {
        w.dy = sllt.solve(r1);
        w.df.resize(0);
      } else {
        VectorXd rhs(m + nf);
        rhs.head(m) = r1;
        rhs.tail(nf) = w.rf;
        VectorXd sol2 = saddle_ldlt.solve(rhs);
        w.dy = sol2.head(m);
        w.df = sol2.tail(nf);
      }
      recover_directions();
      // iterative refinement against the exact linearized primal
      // equation A(dX) + B df = Rp: the scaled W products amplify
      // Schur-solve error once the iterates near the boundary
      const double rp_scale = std::max(1.0, w.Rp.norm());
      for (int ref = 0; ref < 3; ++ref) {
        VectorXd res = w.Rp - a_inner(w.dX);
        if (nf > 0) res -= B * w.df;
        if (res.norm() <= 1e-11 * rp_scale) break;
        if (nf == 0) {
          w.dy += sllt.solve(res);
        } else {
          VectorXd rhs(m + nf);
          rhs.head(m) = res;
          rhs.tail(nf).setZero();
          VectorXd sol2 = saddle_ldlt.solve(rhs);
          w.dy += sol2.head(m);
          w.df += sol2.tail(nf);
        }
        recover_directions();
      }
    };

    // predictor
    std::vector<MatrixXd> G(nb);
    for (int k = 0; k < nb; ++k) {
      G[k] = MatrixXd::Zero(prob.dims[k], prob.dims[k]);
      G[k].diagonal() = -w.sc[k].lambda;
    }
    solve_direction(G);

    double ap = 1.0, ad = 1.0;
    for (int k = 0; k < nb; ++k) {
      ap = std::min(ap, max_step(w.X[k], w.dX[k]));
      ad = std::min(ad, max_step(w.Z[k], w.dZ[k]));
    }
    double mu_aff = 0;
    for (int k = 0; k < nb; ++k)
      mu_aff += (w.X[k] + ap * w.dX[k])
                    .cwiseProduct(w.Z[k] + ad * w.dZ[k])
                    .sum();
    mu_aff /= ntot;
    double sigma = std::pow(std::max(0.0, mu_aff / mu), 3.0);
    sigma = std::min(0.99999, std::max(1e-10, sigma));

    // corrector with the Mehrotra cross term in scaled space
    for (int k = 0; k < nb; ++k) {
      const int n = prob.dims[k];
      const VectorXd& lam = w.sc[k].lambda;
      MatrixXd dXh = w.sc[k].Rinv * w.dX[k] * w.sc[k].RinvT;
      MatrixXd dZh = w.sc[k].Rt * w.dZ[k] * w.sc[k].R;
      MatrixXd H = 0.5 * (dXh * dZh + dZh.transpose() * dXh.transpose());
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
          const double target = (i == j ? sigma * mu : 0.0) - H(i, j);
          G[k](i, j) = target * 2.0 / (lam(i) + lam(j));
        }
        G[k](i, i) -= lam(i);
      }
      G[k] = 0.5 * (G[k] + G[k].transpose()).eval();
    }
    solve_direction(G);

    ap = 1.0;
    ad = 1.0;
    for (int k = 0; k < nb; ++k) {
      ap = std::min(ap, max_step(w.X[k], w.dX[k]));
      ad = std::min(ad, max_step(w.Z[k], w.dZ[k]));
    }
    ap = std::min(1.0, 0.99 * ap);
    ad = std::min(1.0, 0.99 * ad);

    if (std::getenv("MOMREV_IPM_VERBOSE"))
      std::fprintf(stderr, "      sigma=%9.2e ap=%9.2e ad=%9.2e\n", sigma, ap,
                   ad);
    if (ap < 1e-10 && ad < 1e-10) {
      ++stall_count;
      if (stall_count >= 3)
        return finish(rel_p <= 100 * tol && rel_d <= 100 * tol &&
                              rel_g <= 100 * tol
                          ? SolveStatus::near_optimal
                          : SolveStatus::stalled,
                      "search direction collapsed");
    } else {
      stall_count = 0;
    }

    for (int k = 0; k < nb; ++k) {
      w.X[k] += ap * w.dX[k];
      w.Z[k] += ad * w.dZ[k];
    }
    w.y += ad * w.dy;
    if (nf > 0) w.f += ap * w.df;

    if (rel_g < best_gap) best_gap = rel_g;
  }

  it = max_iterations;
  const bool close = sol.rel_primal <= 100 * tol && sol.rel_dual <= 100 * tol &&
                     sol.rel_gap <= 100 * tol;
  return finish(close ? SolveStatus::near_optimal : SolveStatus::stalled,
                "iteration limit reached");
}

}  // namespace momrev::detail
