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

#include "momrev/sdp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <stdexcept>

#include "ipm.hpp"
#include "presolve.hpp"

namespace momrev {

namespace {
using Eigen::MatrixXd;
using Eigen::VectorXd;
}  // namespace

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::optimal: return "optimal";
    case SolveStatus::near_optimal: return "near_optimal";
    case SolveStatus::infeasible: return "infeasible";
    case SolveStatus::unbounded: return "unbounded";
    case SolveStatus::stalled: return "stalled";
  }
  return "?";
}

void ConicProblem::add_equality(LinearExpr lhs, double rhs) {
  eq_lhs.push_back(std::move(lhs));
  eq_rhs.push_back(rhs);
}

std::string ConicProblem::check() const {
  auto check_expr = [&](const LinearExpr& e, const std::string& where) {
    for (const auto& mc : e.mat) {
      if (mc.block < 0 || mc.block >= static_cast<int>(block_dims.size()))
        return where + ": block index " + std::to_string(mc.block) +
               " out of range";
      const int n = block_dims[mc.block];
      if (mc.row < 0 || mc.col < 0 || mc.row >= n || mc.col >= n)
        return where + ": entry (" + std::to_string(mc.row) + "," +
               std::to_string(mc.col) + ") outside block of dim " +
               std::to_string(n);
      if (mc.row > mc.col)
        return where + ": lower-triangle reference (" +
               std::to_string(mc.row) + "," + std::to_string(mc.col) + ")";
    }
    for (const auto& sc : e.scalar) {
      if (sc.index < 0 || sc.index >= num_scalars)
        return where + ": scalar index " + std::to_string(sc.index) +
               " out of range";
    }
    return std::string();
  };
  for (int d : block_dims)
    if (d <= 0) return "non-positive block dimension";
  std::string err = check_expr(objective, "objective");
  if (!err.empty()) return err;
  for (std::size_t i = 0; i < eq_lhs.size(); ++i) {
    err = check_expr(eq_lhs[i], "equality " + std::to_string(i));
    if (!err.empty()) return err;
  }
  if (eq_lhs.size() != eq_rhs.size()) return "lhs/rhs length mismatch";
  return {};
}

double eval_expr(const LinearExpr& expr, const std::vector<MatrixXd>& blocks,
                 const VectorXd& scalars) {
  double v = expr.constant;
  for (const auto& mc : expr.mat)
    v += mc.value * blocks[mc.block](mc.row, mc.col);
  for (const auto& sc : expr.scalar) v += sc.value * scalars(sc.index);
  return v;
}

namespace detail {

LmiForm to_lmi(const ConicProblem& p) {
  LmiForm lf;
  if (p.num_scalars == 0) {
    lf.note = "no scalars";
    return lf;
  }
  const int nb = static_cast<int>(p.block_dims.size());
  const int ns = p.num_scalars;
  lf.entries.resize(nb);
  for (int k = 0; k < nb; ++k)
    lf.entries[k].assign(
        static_cast<std::size_t>(p.block_dims[k]) * p.block_dims[k],
        EntryExpr{});

  for (int i = 0; i < p.num_equalities(); ++i) {
    const auto& e = p.eq_lhs[i];
    if (e.mat.empty()) {
      lf.scalar_eqs.push_back(i);
      continue;
    }
    if (e.mat.size() != 1) {
      lf.note = "an equality couples several block entries";
      return lf;
    }
    const MatCoeff& mc = e.mat[0];
    if (mc.value == 0.0) {
      lf.note = "zero coefficient on a block entry";
      return lf;
    }
    EntryExpr& ee = lf.entries[mc.block][static_cast<std::size_t>(mc.row) *
                                             p.block_dims[mc.block] +
                                         mc.col];
    if (ee.link >= 0) {
      lf.note = "a block entry is defined twice";
      return lf;
    }
    ee.link = i;
    ee.constant = p.eq_rhs[i] / mc.value;
    for (const auto& sc : e.scalar)
      ee.coeffs.push_back({sc.index, -sc.value / mc.value});
  }
  for (int k = 0; k < nb; ++k) {
    const int n = p.block_dims[k];
    for (int r = 0; r < n; ++r)
      for (int c = r; c < n; ++c)
        if (lf.entries[k][static_cast<std::size_t>(r) * n + c].link < 0) {
          lf.note = "an undefined block entry remains";
          return lf;
        }
  }

  // objective as an affine function of the scalars
  VectorXd cfull = VectorXd::Zero(ns);
  lf.offset = p.objective.constant;
  for (const auto& sc : p.objective.scalar) cfull(sc.index) += sc.value;
  for (const auto& mc : p.objective.mat) {
    const auto& ee = lf.entries[mc.block][static_cast<std::size_t>(mc.row) *
                                              p.block_dims[mc.block] +
                                          mc.col];
    lf.offset += mc.value * ee.constant;
    for (const auto& sc : ee.coeffs) cfull(sc.index) += mc.value * sc.value;
  }

  const int q = static_cast<int>(lf.scalar_eqs.size());
  lf.E = MatrixXd::Zero(q, ns);
  VectorXd g(q);
  for (int r = 0; r < q; ++r) {
    const int i = lf.scalar_eqs[r];
    g(r) = p.eq_rhs[i];
    for (const auto& sc : p.eq_lhs[i].scalar) lf.E(r, sc.index) += sc.value;
  }

  lf.ypart = VectorXd::Zero(ns);
  if (q > 0) {
    Eigen::ColPivHouseholderQR<MatrixXd> qrE(lf.E);
    lf.ypart = qrE.solve(g);
    if ((lf.E * lf.ypart - g).norm() > 1e-8 * (1.0 + g.norm())) {
      lf.ok = true;  // shape recognized, but the equalities conflict
      lf.inconsistent = true;
      lf.note = "inconsistent scalar equalities";
      return lf;
    }
    Eigen::ColPivHouseholderQR<MatrixXd> qrEt(lf.E.transpose());
    MatrixXd Qfull = qrEt.householderQ();
    lf.N = Qfull.rightCols(ns - static_cast<int>(qrEt.rank()));
  } else {
    lf.N = MatrixXd::Identity(ns, ns);
  }
  const int mz = lf.mz();

  lf.dims = p.block_dims;
  lf.F0.resize(nb);
  lf.Fstack.resize(nb);
  for (int k = 0; k < nb; ++k) {
    const int n = p.block_dims[k];
    lf.F0[k].setZero(n, n);
    lf.Fstack[k] = MatrixXd::Zero(static_cast<Eigen::Index>(mz) * n, n);
    for (int r = 0; r < n; ++r)
      for (int c = r; c < n; ++c) {
        const auto& ee = lf.entries[k][static_cast<std::size_t>(r) * n + c];
        double f0 = ee.constant;
        for (const auto& sc : ee.coeffs) f0 += sc.value * lf.ypart(sc.index);
        lf.F0[k](r, c) = f0;
        lf.F0[k](c, r) = f0;
        for (const auto& sc : ee.coeffs) {
          for (int j = 0; j < mz; ++j) {
            const double v = sc.value * lf.N(sc.index, j);
            if (v == 0.0) continue;
            lf.Fstack[k](static_cast<Eigen::Index>(j) * n + r, c) += v;
            if (r != c)
              lf.Fstack[k](static_cast<Eigen::Index>(j) * n + c, r) += v;
          }
        }
      }
  }
  lf.c = lf.N.transpose() * cfull;
  lf.offset += cfull.dot(lf.ypart);
  lf.ok = true;
  return lf;
}

}  // namespace detail

namespace {

ConicSolution solve_direct(const ConicProblem& p, const SolverOptions& opt) {
  detail::StdSdp sp;
  sp.dims = p.block_dims;
  const int nb = static_cast<int>(p.block_dims.size());
  const int m = p.num_equalities();
  sp.C.resize(nb);
  for (int k = 0; k < nb; ++k)
    sp.C[k] = MatrixXd::Zero(p.block_dims[k], p.block_dims[k]);
  for (const auto& mc : p.objective.mat) {
    if (mc.row == mc.col)
      sp.C[mc.block](mc.row, mc.col) += mc.value;
    else {
      sp.C[mc.block](mc.row, mc.col) += 0.5 * mc.value;
      sp.C[mc.block](mc.col, mc.row) += 0.5 * mc.value;
    }
  }
  sp.Astack.resize(nb);
  for (int k = 0; k < nb; ++k) {
    const int n = p.block_dims[k];
    sp.Astack[k] = MatrixXd::Zero(static_cast<Eigen::Index>(m) * n, n);
  }
  for (int i = 0; i < m; ++i) {
    for (const auto& mc : p.eq_lhs[i].mat) {
      const int n = p.block_dims[mc.block];
      auto blockrow =
          sp.Astack[mc.block].middleRows(static_cast<Eigen::Index>(i) * n, n);
      if (mc.row == mc.col)
        blockrow(mc.row, mc.col) += mc.value;
      else {
        blockrow(mc.row, mc.col) += 0.5 * mc.value;
        blockrow(mc.col, mc.row) += 0.5 * mc.value;
      }
    }
  }
  sp.b = Eigen::Map<const VectorXd>(p.eq_rhs.data(), m);
  if (p.num_scalars > 0) {
    sp.B = MatrixXd::Zero(m, p.num_scalars);
    for (int i = 0; i < m; ++i)
      for (const auto& sc : p.eq_lhs[i].scalar) sp.B(i, sc.index) += sc.value;
    sp.cf = VectorXd::Zero(p.num_scalars);
    for (const auto& sc : p.objective.scalar) sp.cf(sc.index) += sc.value;
  } else {
    sp.B.resize(m, 0);
    sp.cf.resize(0);
  }

  const auto st = detail::ipm_solve(sp, opt.tol, opt.max_iterations);

  ConicSolution out;
  out.status = st.status;
  out.message = st.message;
  out.iterations = st.iterations;
  out.blocks = st.X;
  out.scalars = st.f;
  out.eq_duals = st.y;
  out.objective = st.pobj + p.objective.constant;
  out.dual_objective = st.dobj + p.objective.constant;
  out.primal_residual = st.rel_primal;
  out.dual_residual = st.rel_dual;
  out.gap = st.rel_gap;
  return out;
}

ConicSolution solve_lmi(const ConicProblem& p, const detail::LmiForm& lf,
                        const SolverOptions& opt) {
  ConicSolution out;
  const int nb = static_cast<int>(p.block_dims.size());
  const int ns = p.num_scalars;
  const int mz = lf.mz();

  auto block_value = [&](int k, const VectorXd& f) {
    const int n = p.block_dims[k];
    MatrixXd X(n, n);
    for (int r = 0; r < n; ++r)
      for (int c = r; c < n; ++c) {
        const auto& ee = lf.entries[k][static_cast<std::size_t>(r) * n + c];
        double v = ee.constant;
        for (const auto& sc : ee.coeffs) v += sc.value * f(sc.index);
        X(r, c) = v;
        X(c, r) = v;
      }
    return X;
  };

  if (lf.inconsistent) {
    out.status = SolveStatus::infeasible;
    out.message = lf.note;
    return out;
  }

  if (mz == 0) {
    // every scalar pinned by the equalities: evaluate and report
    out.scalars = lf.ypart;
    out.blocks.resize(nb);
    double lmin = 0;
    for (int k = 0; k < nb; ++k) {
      out.blocks[k] = block_value(k, lf.ypart);
      Eigen::SelfAdjointEigenSolver<MatrixXd> es(out.blocks[k],
                                                 Eigen::EigenvaluesOnly);
      lmin = std::min(lmin, es.eigenvalues().minCoeff());
    }
    out.status = lmin >= -10 * opt.tol ? SolveStatus::optimal
                                       : SolveStatus::infeasible;
    out.objective = lf.offset;
    out.dual_objective = lf.offset;
    out.eq_duals = VectorXd::Zero(p.num_equalities());
    out.message = "fully determined by the equalities";
    return out;
  }

  // memory guard for the dense constraint representation
  double entries = 0;
  for (int k = 0; k < nb; ++k)
    entries += static_cast<double>(p.block_dims[k]) * p.block_dims[k];
  if (entries * (mz + 4) * 8.0 > opt.max_gigabytes * double(1u << 30)) {
    out.status = SolveStatus::stalled;
    out.message =
        "problem too large for the embedded solver; export it instead";
    return out;
  }

  // internal (D): max b'y, sum_j y_j A_j + Z = C with A_j = -F_j,
  // C = F0, b = -c; then z = y and Z is the LMI value.
  detail::StdSdp sp;
  sp.dims = p.block_dims;
  sp.C = lf.F0;
  // a small identity shift keeps an interior when the exact feasible
  // set is flat against the cone boundary; it relaxes the bound by at
  // most shift * (dual trace), far below the solver tolerance here
  const char* shift_env = std::getenv("MOMREV_LMI_SHIFT");
  const double shift = shift_env ? std::atof(shift_env) : 0.0;
  if (shift > 0)
    for (int k = 0; k < nb; ++k)
      sp.C[k].diagonal().array() += shift;
  sp.Astack.resize(nb);
  for (int k = 0; k < nb; ++k) sp.Astack[k] = -lf.Fstack[k];
  sp.b = -lf.c;
  sp.B.resize(mz, 0);
  sp.cf.resize(0);

  const auto st = detail::ipm_solve(sp, opt.tol, opt.max_iterations);

  // the internal primal side is this problem's dual and vice versa
  switch (st.status) {
    case SolveStatus::infeasible: out.status = SolveStatus::unbounded; break;
    case SolveStatus::unbounded: out.status = SolveStatus::infeasible; break;
    default: out.status = st.status;
  }
  out.message = st.message;
  out.iterations = st.iterations;

  const VectorXd f = lf.ypart + lf.N * st.y;
  out.scalars = f;
  out.blocks.resize(nb);
  for (int k = 0; k < nb; ++k) out.blocks[k] = block_value(k, f);

  VectorXd cfull = VectorXd::Zero(ns);
  double cconst = p.objective.constant;
  for (const auto& sc : p.objective.scalar) cfull(sc.index) += sc.value;
  std::vector<MatrixXd> Cobj(nb);
  for (int k = 0; k < nb; ++k)
    Cobj[k] = MatrixXd::Zero(p.block_dims[k], p.block_dims[k]);
  for (const auto& mc : p.objective.mat) {
    const auto& ee = lf.entries[mc.block][static_cast<std::size_t>(mc.row) *
                                              p.block_dims[mc.block] +
                                          mc.col];
    cconst += mc.value * ee.constant;
    for (const auto& sc : ee.coeffs) cfull(sc.index) += mc.value * sc.value;
    if (mc.row == mc.col)
      Cobj[mc.block](mc.row, mc.col) += mc.value;
    else {
      Cobj[mc.block](mc.row, mc.col) += 0.5 * mc.value;
      Cobj[mc.block](mc.col, mc.row) += 0.5 * mc.value;
    }
  }
  out.objective = cfull.dot(f) + cconst;

  // equality multipliers: link duals from the internal primal matrices,
  // scalar-equality duals from stationarity in the scalars
  out.eq_duals = VectorXd::Zero(p.num_equalities());
  VectorXd nu_rhs = VectorXd::Zero(ns);
  for (int k = 0; k < nb; ++k) {
    const int n = p.block_dims[k];
    for (int r = 0; r < n; ++r)
      for (int c = r; c < n; ++c) {
        const auto& ee = lf.entries[k][static_cast<std::size_t>(r) * n + c];
        const MatCoeff& mc = p.eq_lhs[ee.link].mat[0];
        const double nu =
            (r == c ? (Cobj[k](r, c) - st.X[k](r, c)) / mc.value
                    : 2.0 * (Cobj[k](r, c) - st.X[k](r, c)) / mc.value);
        out.eq_duals(ee.link) = nu;
        for (const auto& sc : p.eq_lhs[ee.link].scalar)
          nu_rhs(sc.index) += nu * sc.value;
      }
  }
  if (!lf.scalar_eqs.empty()) {
    VectorXd cs = VectorXd::Zero(ns);
    for (const auto& sc : p.objective.scalar) cs(sc.index) += sc.value;
    // add the objective's block-entry dependence on the scalars
    for (const auto& mc : p.objective.mat) {
      const auto& ee = lf.entries[mc.block][static_cast<std::size_t>(mc.row) *
                                                p.block_dims[mc.block] +
                                            mc.col];
      for (const auto& sc : ee.coeffs) cs(sc.index) += mc.value * sc.value;
    }
    Eigen::ColPivHouseholderQR<MatrixXd> qrEt(lf.E.transpose());
    const VectorXd lam = qrEt.solve(cs - nu_rhs);
    for (std::size_t r = 0; r < lf.scalar_eqs.size(); ++r)
      out.eq_duals(lf.scalar_eqs[r]) = lam(static_cast<Eigen::Index>(r));
  }
  // certified bound from the internal primal matrices: any X with
  // <F_j, X> = c_j, X PSD gives value >= -<F0, X> + offset, and this
  // certificate does not degrade with the interior shift
  double cert = lf.offset;
  for (int k = 0; k < nb; ++k) cert -= lf.F0[k].cwiseProduct(st.X[k]).sum();
  out.dual_objective = cert;

  out.primal_residual = st.rel_primal;
  out.dual_residual = st.rel_dual;
  out.gap = st.rel_gap;
  return out;
}

}  // namespace

ConicSolution solve(const ConicProblem& problem, const SolverOptions& opt) {
  const std::string err = problem.check();
  if (!err.empty()) throw std::invalid_argument("sdp::solve: " + err);
  if (problem.block_dims.empty())
    throw std::invalid_argument("sdp::solve: no blocks");

  const detail::LmiForm lf = detail::to_lmi(problem);
  return lf.ok ? solve_lmi(problem, lf, opt) : solve_direct(problem, opt);
}

}  // namespace momrev
