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

#include "momrev/relax.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace momrev {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

}  // namespace

MatrixXd moment_matrix(const VectorXd& y, int nvars, int d) {
  const auto basis = monomial_basis(nvars, d);
  const int n = static_cast<int>(basis.size());
  MatrixXd M(n, n);
  for (int a = 0; a < n; ++a)
    for (int b = a; b < n; ++b) {
      const Monomial prod = basis[a] * basis[b];
      const std::size_t idx = monomial_index(prod, nvars);
      if (idx >= static_cast<std::size_t>(y.size()))
        throw std::invalid_argument("moment_matrix: missing moment for " +
                                    prod.to_string());
      M(a, b) = y(static_cast<Eigen::Index>(idx));
      M(b, a) = M(a, b);
    }
  return M;
}

MatrixXd localizing_matrix(const VectorXd& y, const Polynomial& g, int d) {
  const int nvars = g.nvars();
  const auto basis = monomial_basis(nvars, d);
  const int n = static_cast<int>(basis.size());
  MatrixXd M(n, n);
  for (int a = 0; a < n; ++a)
    for (int b = a; b < n; ++b) {
      const Monomial prod = basis[a] * basis[b];
      double v = 0;
      for (const auto& [mono, coeff] : g.terms()) {
        const Monomial full = prod * mono;
        const std::size_t idx = monomial_index(full, nvars);
        if (idx >= static_cast<std::size_t>(y.size()))
          throw std::invalid_argument(
              "localizing_matrix: missing moment for " + full.to_string());
        v += coeff * y(static_cast<Eigen::Index>(idx));
      }
      M(a, b) = v;
      M(b, a) = v;
    }
  return M;
}

const MeasureInfo* MeasureLayout::find(MeasureRole role, int mode_id,
                                       int transition) const {
  for (const auto& m : measures) {
    if (m.role != role) continue;
    if (role == MeasureRole::guard) {
      if (m.transition == transition) return &m;
    } else if (m.mode_id == mode_id) {
      return &m;
    }
  }
  return nullptr;
}

namespace {

struct Builder {
  const HybridSystem& chs;
  const WindowCost& cost;
  const int d;
  const RelaxOptions& opt;

  RelaxationProblem rp;
  double t0 = 0, t1 = 1, dt = 1;

  // adds coefficients of `p` (over the measure's variables) into the
  // expression, addressed through the measure's moment coordinates
  void add_poly(LinearExpr& e, const MeasureInfo& mi, const Polynomial& p,
                double sign) {
    for (const auto& [mono, coeff] : p.terms()) {
      if (static_cast<int>(mono.degree()) > mi.max_degree)
        throw std::invalid_argument(
            "build_relaxation: monomial " + mono.to_string() + " of degree " +
            std::to_string(mono.degree()) + " exceeds the moment budget " +
            std::to_string(mi.max_degree) + " of " + mi.name);
      const std::size_t idx = monomial_index(mono, mi.nvars);
      e.scalar.push_back(
          {mi.offset + static_cast<int>(idx), sign * coeff});
    }
  }

  // scaled dynamics, running costs, resets, guard times
  struct ScaledMode {
    std::vector<Polynomial> f;  // on (vars..., inputs...), scaled
    Polynomial h;               // running cost, scaled, zero allowed
    double tlo = 0, thi = 1;    // scaled time window
  };
  std::map<int, ScaledMode> scaled;

  Eigen::MatrixXd mode_affine(const Mode& m, int inputs) const {
    // (xhat, uhat) -> (x, u) diag map with offset
    const int n = m.dim + inputs;
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
    const ModeScaling& ms = rp.scaling.modes.at(m.id);
    for (int i = 0; i < m.dim; ++i) A(i, i) = ms.width(i);
    for (int k = 0; k < inputs; ++k)
      A(m.dim + k, m.dim + k) = rp.scaling.input_scale(k);
    return A;
  }
  Eigen::VectorXd mode_offset(const Mode& m, int inputs) const {
    Eigen::VectorXd b = Eigen::VectorXd::Zero(m.dim + inputs);
    const ModeScaling& ms = rp.scaling.modes.at(m.id);
    b.head(m.dim) = ms.lo;
    return b;
  }

  void build();
};

void Builder::build() {
  const auto diags = validate(chs);
  if (!diags.empty())
    throw std::invalid_argument("build_relaxation: system invalid: " +
                                diags.front().code + ": " +
                                diags.front().message);
  const int inputs = chs.num_inputs();
  if (inputs < 1)
    throw std::invalid_argument("build_relaxation: no input variables");
  t0 = chs.horizon_start();
  t1 = chs.horizon_end();
  dt = t1 - t0;

  // clock rows and degree budget
  int max_f_deg = 1;
  for (const auto& m : chs.modes) {
    if (!(m.dynamics.at(0) == Polynomial::constant(m.dim + inputs, 1.0)))
      throw std::invalid_argument(
          "build_relaxation: mode " + std::to_string(m.id) +
          " lacks the unit clock row; time-extended dynamics are required");
    for (const auto& f : m.dynamics) max_f_deg = std::max(max_f_deg, f.degree());
  }
  const int budget = 2 * d;
  int needed = (max_f_deg + 1 + 1) / 2;  // test degree 1 must fit
  for (const auto& [id, h] : cost.running)
    if (!h.is_zero()) needed = std::max(needed, (h.degree() + 1) / 2);
  for (const auto& [id, H] : cost.terminal)
    if (!H.is_zero()) needed = std::max(needed, (H.degree() + 1) / 2);
  if (d < needed)
    throw std::invalid_argument(
        "build_relaxation: order " + std::to_string(d) +
        " cannot hold the problem degrees; need at least order " +
        std::to_string(needed));
  rp.test_degree = std::min(budget, budget + 1 - max_f_deg);

  // scaling
  rp.scaling.t0 = t0;
  rp.scaling.t1 = t1;
  rp.scaling.cost_scale = opt.cost_scale;
  rp.scaling.input_scale = VectorXd::Constant(inputs, opt.zeta);
  for (const auto& m : chs.modes) {
    ModeScaling ms;
    ms.lo = VectorXd(m.dim);
    ms.width = VectorXd(m.dim);
    ms.lo(0) = t0;
    ms.width(0) = dt;
    for (int i = 1; i < m.dim; ++i) {
      ms.lo(i) = m.domain.lo(i);
      const double w = m.domain.hi(i) - m.domain.lo(i);
      ms.width(i) = w > 0 ? w : 1.0;
    }
    rp.scaling.modes[m.id] = ms;
  }

  // scaled dynamics and running costs
  for (const auto& m : chs.modes) {
    ScaledMode sm;
    const Eigen::MatrixXd A = mode_affine(m, inputs);
    const Eigen::VectorXd b = mode_offset(m, inputs);
    const ModeScaling& ms = rp.scaling.modes.at(m.id);
    sm.f.reserve(m.dim);
    for (int k = 0; k < m.dim; ++k)
      sm.f.push_back(m.dynamics[k].compose_affine(A, b) * (dt / ms.width(k)));
    auto it = cost.running.find(m.id);
    if (it != cost.running.end() && !it->second.is_zero())
      sm.h = it->second.compose_affine(A, b) * (dt / opt.cost_scale);
    else
      sm.h = Polynomial::zero(m.dim + inputs);
    sm.tlo = (m.domain.lo(0) - t0) / dt;
    sm.thi = (m.domain.hi(0) - t0) / dt;
    scaled[m.id] = sm;
  }

  // ---- measure layout --------------------------------------------------
  auto add_measure = [&](MeasureRole role, int mode_id, int transition,
                         int nvars, const std::string& name) {
    MeasureInfo mi;
    mi.role = role;
    mi.mode_id = mode_id;
    mi.transition = transition;
    mi.nvars = nvars;
    mi.max_degree = budget;
    mi.offset = rp.layout.total;
    mi.count = static_cast<int>(monomial_count(nvars, budget));
    mi.name = name;
    rp.layout.total += mi.count;
    rp.layout.measures.push_back(mi);
  };

  for (const auto& m : chs.modes)
    add_measure(MeasureRole::occupation, m.id, -1, m.dim + inputs,
                "occ[" + std::to_string(m.id) + "]");
  for (std::size_t k = 0; k < chs.transitions.size(); ++k) {
    const auto& tr = chs.transitions[k];
    add_measure(MeasureRole::guard, -1, static_cast<int>(k),
                chs.mode(tr.from).dim - 1,
                "guard[" + std::to_string(tr.from) + "->" +
                    std::to_string(tr.to) + "]");
  }
  std::vector<int> final_modes;
  for (const auto& m : chs.modes)
    if (m.time_window().second >= t1 - 1e-9 * std::max(1.0, std::abs(t1))) {
      final_modes.push_back(m.id);
      add_measure(MeasureRole::terminal, m.id, -1, m.dim - 1,
                  "term[" + std::to_string(m.id) + "]");
    }
  if (final_modes.empty())
    throw std::invalid_argument(
        "build_relaxation: no mode reaches the window end");

  ConicProblem& cp = rp.conic;
  cp.name = chs.name;
  cp.num_scalars = rp.layout.total;
  for (const auto& mi : rp.layout.measures) {
    const auto basis = monomial_basis(mi.nvars, budget);
    for (const auto& mono : basis)
      cp.scalar_names.push_back(mi.name + "/" + mono.to_string());
  }

  // ---- moment and localizing blocks with entry links --------------------
  auto add_moment_block = [&](const MeasureInfo& mi, const Polynomial& g,
                              int bd, const std::string& bname) {
    const auto basis = monomial_basis(mi.nvars, bd);
    const int n = static_cast<int>(basis.size());
    const int block = static_cast<int>(cp.block_dims.size());
    cp.block_dims.push_back(n);
    cp.block_names.push_back(bname);
    for (int a = 0; a < n; ++a)
      for (int b = a; b < n; ++b) {
        LinearExpr link;
        link.mat.push_back({block, a, b, 1.0});
        const Monomial prod = basis[a] * basis[b];
        for (const auto& [mono, coeff] : g.terms()) {
          const Monomial full = prod * mono;
          const std::size_t idx = monomial_index(full, mi.nvars);
          link.scalar.push_back(
              {mi.offset + static_cast<int>(idx), -coeff});
        }
        cp.add_equality(std::move(link), 0.0);
        cp.eq_names.push_back("link:" + bname + "(" + std::to_string(a) + "," +
                              std::to_string(b) + ")");
      }
  };

  auto box_polys = [&](const MeasureInfo& mi) {
    // scaled support box per variable of the measure
    std::vector<Polynomial> gs;
    auto interval_poly = [&](int var, double lo, double hi) {
      const Polynomial v = Polynomial::variable(mi.nvars, var);
      return (v - Polynomial::constant(mi.nvars, lo)) *
             (Polynomial::constant(mi.nvars, hi) - v);
    };
    if (mi.role == MeasureRole::occupation) {
      const Mode& m = chs.mode(mi.mode_id);
      const ScaledMode& sm = scaled.at(mi.mode_id);
      gs.push_back(interval_poly(0, sm.tlo, sm.thi));
      for (int i = 1; i < m.dim; ++i) gs.push_back(interval_poly(i, 0.0, 1.0));
      for (int k = 0; k < inputs; ++k) {
        const double z = rp.scaling.input_scale(k);
        gs.push_back(interval_poly(m.dim + k, chs.input_box.lo(k) / z,
                                   chs.input_box.hi(k) / z));
      }
    } else if (mi.role == MeasureRole::guard) {
      const auto& tr = chs.transitions[mi.transition];
      const Mode& src = chs.mode(tr.from);
      const ModeScaling& ms = rp.scaling.modes.at(src.id);
      for (int i = 1; i < src.dim; ++i) {
        const double lo = (tr.guard.lo(i) - ms.lo(i)) / ms.width(i);
        const double hi = (tr.guard.hi(i) - ms.lo(i)) / ms.width(i);
        gs.push_back(interval_poly(i - 1, lo, hi));
      }
    } else {  // terminal
      const Mode& m = chs.mode(mi.mode_id);
      const ModeScaling& ms = rp.scaling.modes.at(m.id);
      for (int i = 1; i < m.dim; ++i) {
        double lo = m.domain.lo(i), hi = m.domain.hi(i);
        if (m.target) {
          lo = std::max(lo, m.target->lo(i));
          hi = std::min(hi, m.target->hi(i));
        }
        gs.push_back(interval_poly(i - 1, (lo - ms.lo(i)) / ms.width(i),
                                   (hi - ms.lo(i)) / ms.width(i)));
      }
    }
    return gs;
  };

  for (const auto& mi : rp.layout.measures) {
    add_moment_block(mi, Polynomial::constant(mi.nvars, 1.0), d,
                     "M[" + mi.name + "]");
    if (d >= 1)
      for (const auto& g : box_polys(mi)) {
        std::string gname = g.to_string();
        if (gname.size() > 24) gname = gname.substr(0, 24) + "...";
        add_moment_block(mi, g, d - 1, "L[" + mi.name + "; " + gname + "]");
      }
  }

  // ---- Liouville identities ---------------------------------------------
  const ModeScaling& ms0 = rp.scaling.modes.at(chs.initial_mode);
  VectorXd x0hat =
      (chs.initial_state - ms0.lo).cwiseQuotient(ms0.width);

  for (const auto& m : chs.modes) {
    const MeasureInfo& occ = *rp.layout.find(MeasureRole::occupation, m.id);
    const ScaledMode& sm = scaled.at(m.id);
    const auto tests = monomial_basis(m.dim, rp.test_degree);
    for (const auto& vmono : tests) {
      Polynomial v = Polynomial::from_terms(m.dim, {{vmono, 1.0}});
      LinearExpr row;
      double rhs = 0.0;

      // flow term: integral of Lv over the occupation measure
      Polynomial lv(m.dim + inputs);
      for (int k = 0; k < m.dim; ++k) {
        const Polynomial dv = v.derivative(k);
        if (!dv.is_zero()) lv += dv.extended(m.dim + inputs) * sm.f[k];
      }
      add_poly(row, occ, lv, 1.0);

      // outgoing guard terms: - v(c_tau, x) on the guard measure
      for (std::size_t k = 0; k < chs.transitions.size(); ++k) {
        const auto& tr = chs.transitions[k];
        if (tr.from != m.id) continue;
        const MeasureInfo& gm =
            *rp.layout.find(MeasureRole::guard, -1, static_cast<int>(k));
        const double chat = (*tr.clock_value() - t0) / dt;
        Polynomial vg = v.substitute(0, chat);
        std::vector<int> map(m.dim, -1);
        for (int i = 1; i < m.dim; ++i) map[i] = i - 1;
        add_poly(row, gm, vg.remap(map, m.dim - 1), -1.0);
      }

      // incoming guard terms: + (v o R)(c_tau, x_src) on the guard measure
      for (std::size_t k = 0; k < chs.transitions.size(); ++k) {
        const auto& tr = chs.transitions[k];
        if (tr.to != m.id) continue;
        const MeasureInfo& gm =
            *rp.layout.find(MeasureRole::guard, -1, static_cast<int>(k));
        const Mode& src = chs.mode(tr.from);
        const ModeScaling& msrc = rp.scaling.modes.at(src.id);
        const ModeScaling& mdst = rp.scaling.modes.at(m.id);
        // scaled reset: xhat_dst = D_dst^{-1} (A (lo_src + D_src xhat_src)
        //                                      + b - lo_dst)
        Eigen::MatrixXd Ahat =
            mdst.width.cwiseInverse().asDiagonal() * tr.reset.A *
            msrc.width.asDiagonal();
        Eigen::VectorXd bhat =
            mdst.width.cwiseInverse().asDiagonal() *
            (tr.reset.A * msrc.lo + tr.reset.b - mdst.lo);
        Polynomial vr = v.compose_affine(Ahat, bhat);  // on src (that, xhat)
        const double chat = (*tr.clock_value() - t0) / dt;
        Polynomial vg = vr.substitute(0, chat);
        std::vector<int> map(src.dim, -1);
        for (int i = 1; i < src.dim; ++i) map[i] = i - 1;
        add_poly(row, gm, vg.remap(map, src.dim - 1), 1.0);
      }

      // terminal term: - v(1, x) on the terminal measure
      if (const MeasureInfo* tm = rp.layout.find(MeasureRole::terminal, m.id)) {
        Polynomial vt = v.substitute(0, 1.0);
        std::vector<int> map(m.dim, -1);
        for (int i = 1; i < m.dim; ++i) map[i] = i - 1;
        add_poly(row, *tm, vt.remap(map, m.dim - 1), -1.0);
      }

      // initial Dirac: + v(0, x0hat) moves to the right-hand side
      if (m.id == chs.initial_mode) {
        rhs = -v.eval(x0hat);
      }

      cp.add_equality(std::move(row), rhs);
      cp.eq_names.push_back("liouville:mode" + std::to_string(m.id) + ":" +
                            vmono.to_string());
    }
  }

  // terminal mass normalization
  {
    LinearExpr mass;
    for (const auto& mi : rp.layout.measures)
      if (mi.role == MeasureRole::terminal)
        mass.scalar.push_back({mi.offset, 1.0});
    cp.add_equality(std::move(mass), 1.0);
    cp.eq_names.push_back("mass:terminal");
  }

  // ---- objective ---------------------------------------------------------
  for (const auto& m : chs.modes) {
    const ScaledMode& sm = scaled.at(m.id);
    if (!sm.h.is_zero())
      add_poly(cp.objective, *rp.layout.find(MeasureRole::occupation, m.id),
               sm.h, 1.0);
  }
  for (int id : final_modes) {
    auto it = cost.terminal.find(id);
    if (it == cost.terminal.end() || it->second.is_zero()) continue;
    const Mode& m = chs.mode(id);
    const ModeScaling& ms = rp.scaling.modes.at(id);
    // terminal cost on x only: compose with the state scaling, drop the
    // pinned time slot
    Polynomial H = it->second;
    if (H.nvars() != m.dim)
      throw std::invalid_argument(
          "build_relaxation: terminal cost for mode " + std::to_string(id) +
          " has nvars " + std::to_string(H.nvars()) + ", expected " +
          std::to_string(m.dim));
    Eigen::MatrixXd A = ms.width.asDiagonal();
    Polynomial Hs = H.compose_affine(A, ms.lo) * (1.0 / opt.cost_scale);
    Polynomial Ht = Hs.substitute(0, 1.0);
    std::vector<int> map(m.dim, -1);
    for (int i = 1; i < m.dim; ++i) map[i] = i - 1;
    add_poly(cp.objective, *rp.layout.find(MeasureRole::terminal, id),
             Ht.remap(map, m.dim - 1), 1.0);
  }
}

}  // namespace

RelaxationProblem build_relaxation(const HybridSystem& window_chs,
                                   const WindowCost& cost, int order,
                                   const RelaxOptions& opt) {
  if (order < 1)
    throw std::invalid_argument("build_relaxation: order must be >= 1");
  Builder b{window_chs, cost, order, opt, {}};
  b.rp.order = order;
  b.rp.window = window_chs;
  b.build();
  return b.rp;
}

MomentData extract_moments(const RelaxationProblem& rp,
                           const ConicSolution& sol) {
  MomentData md;
  md.scaling = rp.scaling;
  md.input_box = rp.window.input_box;
  for (const auto& mi : rp.layout.measures) {
    if (mi.role != MeasureRole::occupation) continue;
    ModeMoments mm;
    mm.mode_id = mi.mode_id;
    mm.dim = rp.window.mode(mi.mode_id).dim;
    mm.inputs = rp.window.num_inputs();
    mm.order = rp.order;
    mm.y = sol.scalars.segment(mi.offset, mi.count);
    md.modes.push_back(std::move(mm));
  }
  return md;
}

RelaxationProblem build_static_relaxation(const Polynomial& objective,
                                          const Box& box, int order) {
  if (order < 1)
    throw std::invalid_argument("build_static_relaxation: order must be >= 1");
  if (objective.degree() > 2 * order)
    throw std::invalid_argument(
        "build_static_relaxation: objective degree exceeds the moment "
        "budget; need at least order " +
        std::to_string((objective.degree() + 1) / 2));
  const int n = box.dim();
  RelaxationProblem rp;
  rp.order = order;
  const int budget = 2 * order;

  MeasureInfo mi;
  mi.role = MeasureRole::occupation;
  mi.nvars = n;
  mi.max_degree = budget;
  mi.offset = 0;
  mi.count = static_cast<int>(monomial_count(n, budget));
  mi.name = "mu";
  rp.layout.measures.push_back(mi);
  rp.layout.total = mi.count;

  ConicProblem& cp = rp.conic;
  cp.name = "static";
  cp.num_scalars = mi.count;
  for (const auto& mono : monomial_basis(n, budget))
    cp.scalar_names.push_back("mu/" + mono.to_string());

  auto add_block = [&](const Polynomial& g, int bd, const std::string& bname) {
    const auto basis = monomial_basis(n, bd);
    const int block = static_cast<int>(cp.block_dims.size());
    cp.block_dims.push_back(static_cast<int>(basis.size()));
    cp.block_names.push_back(bname);
    for (int a = 0; a < static_cast<int>(basis.size()); ++a)
      for (int b = a; b < static_cast<int>(basis.size()); ++b) {
        LinearExpr link;
        link.mat.push_back({block, a, b, 1.0});
        const Monomial prod = basis[a] * basis[b];
        for (const auto& [mono, coeff] : g.terms())
          link.scalar.push_back(
              {static_cast<int>(monomial_index(prod * mono, n)), -coeff});
        cp.add_equality(std::move(link), 0.0);
        cp.eq_names.push_back("link:" + bname);
      }
  };
  add_block(Polynomial::constant(n, 1.0), order, "M[mu]");
  for (int i = 0; i < n; ++i) {
    const Polynomial v = Polynomial::variable(n, i);
    const Polynomial g = (v - Polynomial::constant(n, box.lo(i))) *
                         (Polynomial::constant(n, box.hi(i)) - v);
    add_block(g, order - 1, "L[mu; x" + std::to_string(i) + "]");
  }
  LinearExpr mass;
  mass.scalar.push_back({0, 1.0});
  cp.add_equality(std::move(mass), 1.0);
  cp.eq_names.push_back("mass");
  for (const auto& [mono, coeff] : objective.terms())
    cp.objective.scalar.push_back(
        {static_cast<int>(monomial_index(mono, n)), coeff});
  return rp;
}

std::string RelaxationProblem::dump() const {
  std::ostringstream os;
  os << "relaxation order " << order << ", test degree " << test_degree
     << "\n";
  os << "window [" << scaling.t0 << ", " << scaling.t1 << "], cost scale "
     << scaling.cost_scale << "\n";
  os << "measures (" << layout.measures.size() << "), moments "
     << layout.total << ":\n";
  for (const auto& mi : layout.measures) {
    const char* role = mi.role == MeasureRole::occupation ? "occupation"
                       : mi.role == MeasureRole::guard    ? "guard"
                       : mi.role == MeasureRole::terminal ? "terminal"
                                                          : "initial";
    os << "  " << mi.name << ": role=" << role << " vars=" << mi.nvars
       << " degree<=" << mi.max_degree << " offset=" << mi.offset
       << " count=" << mi.count << "\n";
  }
  os << "blocks (" << conic.block_dims.size() << "):\n";
  for (std::size_t k = 0; k < conic.block_dims.size(); ++k)
    os << "  " << conic.block_names[k] << ": dim " << conic.block_dims[k]
       << "\n";
  os << "equalities: " << conic.num_equalities() << "\n";
  return os.str();
}

}  // namespace momrev
