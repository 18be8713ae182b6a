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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <set>
#include <tuple>

#include "momrev/heme.hpp"
#include "momrev/relax.hpp"
#include "momrev/sim.hpp"

using namespace momrev;

namespace {

// ---- shared toy systems ---------------------------------------------------

// single mode, single state: dx/dt = u on [0,1], x in [-2,2], u in [-1,1]
HybridSystem toy_integrator() {
  HybridSystem chs;
  chs.name = "toy-integrator";
  chs.input_box.bounds = {{-1.0, 1.0}};
  Mode m;
  m.id = 1;
  m.dim = 2;
  m.domain.bounds = {{0.0, 1.0}, {-2.0, 2.0}};
  m.dynamics = {Polynomial::constant(3, 1.0), Polynomial::variable(3, 2)};
  m.running_cost = Polynomial::zero(3);
  m.terminal_cost = Polynomial::zero(2);
  chs.modes.push_back(m);
  chs.initial_mode = 1;
  chs.initial_state = Eigen::VectorXd::Zero(2);
  return chs;
}

WindowCost toy_target_cost() {
  // H = (x - 1)^2 on (t, x)
  WindowCost wc;
  const Polynomial x = Polynomial::variable(2, 1);
  const Polynomial one = Polynomial::constant(2, 1.0);
  wc.terminal[1] = (x - one) * (x - one);
  return wc;
}

// two modes with an affine reset at t = 0.5
HybridSystem toy_two_mode() {
  HybridSystem chs;
  chs.name = "toy-two-mode";
  chs.input_box.bounds = {{-1.0, 1.0}};
  Mode m1;
  m1.id = 1;
  m1.dim = 2;
  m1.domain.bounds = {{0.0, 0.5}, {-2.0, 2.0}};
  m1.dynamics = {Polynomial::constant(3, 1.0), Polynomial::variable(3, 2)};
  m1.running_cost = Polynomial::zero(3);
  m1.terminal_cost = Polynomial::zero(2);
  Mode m2 = m1;
  m2.id = 2;
  m2.domain.bounds = {{0.5, 1.0}, {-2.0, 2.0}};
  // dx/dt = -x + 0.5 u
  m2.dynamics = {Polynomial::constant(3, 1.0),
                 -Polynomial::variable(3, 1) + 0.5 * Polynomial::variable(3, 2)};
  chs.modes = {m1, m2};
  Transition tr;
  tr.from = 1;
  tr.to = 2;
  tr.guard.bounds = {{0.5, 0.5}, {-2.0, 2.0}};
  tr.reset.A = Eigen::MatrixXd::Zero(2, 2);
  tr.reset.A(0, 0) = 1.0;
  tr.reset.A(1, 1) = 0.5;
  tr.reset.b = Eigen::VectorXd::Zero(2);
  tr.reset.b(1) = 0.1;
  chs.transitions = {tr};
  chs.initial_mode = 1;
  chs.initial_state = Eigen::VectorXd::Zero(2);
  chs.initial_state(1) = 0.3;
  return chs;
}

// empirical moments of a simulated pair, in the relaxation's scaled
// coordinates, assembled into the global moment vector of the layout
Eigen::VectorXd empirical_moments(const RelaxationProblem& rp,
                                  const HybridSystem& chs,
                                  const HybridTrajectory& traj,
                                  const ControlFn& control) {
  Eigen::VectorXd y = Eigen::VectorXd::Zero(rp.layout.total);
  const auto& sc = rp.scaling;
  const double dt = sc.t1 - sc.t0;
  const int nu = chs.num_inputs();

  auto clamp = [&](Eigen::VectorXd u) {
    for (int i = 0; i < nu; ++i)
      u(i) = std::min(chs.input_box.hi(i), std::max(chs.input_box.lo(i), u(i)));
    return u;
  };

  for (const auto& mi : rp.layout.measures) {
    const auto basis = monomial_basis(mi.nvars, mi.max_degree);
    if (mi.role == MeasureRole::occupation) {
      const Mode& md = chs.mode(mi.mode_id);
      const ModeScaling& ms = sc.modes.at(mi.mode_id);
      for (const auto& seg : traj.segments) {
        if (seg.mode_id != mi.mode_id) continue;
        const double ta = seg.steps.front().t0;
        const double tb = seg.steps.back().t1;
        const int N = 2000;
        const double h = (tb - ta) / (2 * N);
        Eigen::VectorXd point(mi.nvars);
        std::vector<double> acc(basis.size(), 0.0);
        for (int s = 0; s <= 2 * N; ++s) {
          const double t = std::min(ta + h * s, tb);
          const Eigen::VectorXd x = traj.state_at(t);
          const Eigen::VectorXd u = clamp(control(mi.mode_id, t, x));
          for (int i = 0; i < md.dim; ++i)
            point(i) = (x(i) - ms.lo(i)) / ms.width(i);
          for (int k = 0; k < nu; ++k)
            point(md.dim + k) = u(k) / sc.input_scale(k);
          const double w = (s == 0 || s == 2 * N) ? 1.0
                           : (s % 2 == 1)         ? 4.0
                                                  : 2.0;
          for (std::size_t b = 0; b < basis.size(); ++b)
            acc[b] += w * basis[b].eval(
                              std::span<const double>(point.data(),
                                                      point.size()));
        }
        // Simpson factor h/3, then dtscaled = dt_orig / dt
        for (std::size_t b = 0; b < basis.size(); ++b)
          y(mi.offset + static_cast<int>(b)) += acc[b] * (h / 3.0) / dt;
      }
    } else if (mi.role == MeasureRole::guard) {
      const auto& tr = chs.transitions[mi.transition];
      const ModeScaling& ms = sc.modes.at(tr.from);
      for (const auto& ev : traj.events) {
        if (ev.transition != mi.transition) continue;
        Eigen::VectorXd point(mi.nvars);
        for (int i = 1; i < ev.state_before.size(); ++i)
          point(i - 1) = (ev.state_before(i) - ms.lo(i)) / ms.width(i);
        for (std::size_t b = 0; b < basis.size(); ++b)
          y(mi.offset + static_cast<int>(b)) +=
              basis[b].eval(std::span<const double>(point.data(),
                                                    point.size()));
      }
    } else if (mi.role == MeasureRole::terminal) {
      if (traj.final_mode() != mi.mode_id) continue;
      const ModeScaling& ms = sc.modes.at(mi.mode_id);
      const Eigen::VectorXd x = traj.final_state();
      Eigen::VectorXd point(mi.nvars);
      for (int i = 1; i < x.size(); ++i)
        point(i - 1) = (x(i) - ms.lo(i)) / ms.width(i);
      for (std::size_t b = 0; b < basis.size(); ++b)
        y(mi.offset + static_cast<int>(b)) += basis[b].eval(
            std::span<const double>(point.data(), point.size()));
    }
  }
  return y;
}

double max_liouville_residual(const RelaxationProblem& rp,
                              const Eigen::VectorXd& y) {
  double worst = 0;
  for (int i = 0; i < rp.conic.num_equalities(); ++i) {
    const std::string& name = rp.conic.eq_names[i];
    if (name.rfind("liouville:", 0) != 0 && name.rfind("mass:", 0) != 0)
      continue;
    double v = -rp.conic.eq_rhs[i];
    for (const auto& sc : rp.conic.eq_lhs[i].scalar)
      v += sc.value * y(sc.index);
    worst = std::max(worst, std::abs(v));
  }
  return worst;
}

ControlFn poly_control(const Polynomial& u_of_t) {
  return [u_of_t](int, double t, const Eigen::VectorXd&) {
    Eigen::VectorXd out(1);
    Eigen::VectorXd pt(1);
    pt << t;
    out(0) = u_of_t.eval(pt);
    return out;
  };
}

}  // namespace

TEST_CASE("moment matrices match closed forms") {
  // Dirac at x = 2: moments 1, 2, 4
  Eigen::VectorXd dirac(3);
  dirac << 1, 2, 4;
  const Eigen::MatrixXd M = moment_matrix(dirac, 1, 1);
  CHECK(M(0, 0) == 1.0);
  CHECK(M(0, 1) == 2.0);
  CHECK(M(1, 0) == 2.0);
  CHECK(M(1, 1) == 4.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
  CHECK(es.eigenvalues()(0) >= -1e-12);  // rank 1, PSD

  // Lebesgue on [0,1]: y_k = 1/(k+1)
  Eigen::VectorXd leb(3);
  leb << 1.0, 0.5, 1.0 / 3.0;
  const Eigen::MatrixXd L = moment_matrix(leb, 1, 1);
  CHECK(std::abs(L(0, 1) - 0.5) <= 1e-12);
  CHECK(std::abs(L(1, 1) - 1.0 / 3.0) <= 1e-12);

  // uniform on {-1, +1}: even moments 1, odd 0
  Eigen::VectorXd two(3);
  two << 1.0, 0.0, 1.0;
  const Eigen::MatrixXd T = moment_matrix(two, 1, 1);
  CHECK(T(0, 1) == 0.0);
  CHECK(T(1, 1) == 1.0);

  // missing moments are named
  Eigen::VectorXd shorty(2);
  shorty << 1, 2;
  CHECK_THROWS_WITH_AS(moment_matrix(shorty, 1, 1),
                       doctest::Contains("x0^2"), std::invalid_argument);
}

TEST_CASE("localizing matrices match closed forms") {
  // g = 1 - x^2 against Lebesgue on [0,1], d = 0: [1 - 1/3] = [2/3]
  Eigen::VectorXd leb(3);
  leb << 1.0, 0.5, 1.0 / 3.0;
  const Polynomial x = Polynomial::variable(1, 0);
  const Polynomial g = Polynomial::constant(1, 1.0) - x * x;
  const Eigen::MatrixXd L = localizing_matrix(leb, g, 0);
  REQUIRE(L.rows() == 1);
  CHECK(std::abs(L(0, 0) - 2.0 / 3.0) <= 1e-12);

  // g = 1: localizing equals the moment matrix
  const Eigen::MatrixXd M1 =
      localizing_matrix(leb, Polynomial::constant(1, 1.0), 1);
  CHECK(M1.isApprox(moment_matrix(leb, 1, 1), 0.0));

  // g = x against the Dirac at 2, d = 1: 2 * [[1,2],[2,4]]
  Eigen::VectorXd dirac(4);
  dirac << 1, 2, 4, 8;
  const Eigen::MatrixXd D = localizing_matrix(dirac, x, 1);
  CHECK(D(0, 0) == 2.0);
  CHECK(D(0, 1) == 4.0);
  CHECK(D(1, 1) == 8.0);
}

TEST_CASE("static box relaxation bounds a grid oracle") {
  // min x^2 on [-1, 1]: optimum 0
  const Polynomial x = Polynomial::variable(1, 0);
  Box box;
  box.bounds = {{-1.0, 1.0}};
  const auto rp = build_static_relaxation(x * x, box, 1);
  const auto sol = solve(rp.conic, 1e-8);
  REQUIRE(sol.ok());
  // brute-force grid
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= 20000; ++i) {
    const double xv = -1.0 + 2.0 * i / 20000.0;
    best = std::min(best, xv * xv);
  }
  CHECK(sol.objective <= best + 1e-6);
  CHECK(sol.objective >= -1e-6);
}

TEST_CASE("window layout counts follow the binomial formula") {
  const HybridSystem chs = heme::build();
  const HybridSystem w1 = restrict_system(chs, 0.0, 7.0);
  WindowCost wc;
  const Polynomial m = chs.measurement;  // x6 + 4 x8 on 9 vars
  const Polynomial z = Polynomial::constant(9, 16.0);
  wc.terminal[2] = (m - z) * (m - z);
  RelaxOptions opt;
  opt.zeta = 0.02;
  opt.cost_scale = 16.0 * 16.0;
  const auto rp = build_relaxation(w1, wc, 2, opt);

  REQUIRE(rp.layout.measures.size() == 4);
  const auto* occ1 = rp.layout.find(MeasureRole::occupation, 1);
  const auto* occ2 = rp.layout.find(MeasureRole::occupation, 2);
  const auto* g12 = rp.layout.find(MeasureRole::guard, -1, 0);
  const auto* t2 = rp.layout.find(MeasureRole::terminal, 2);
  REQUIRE(occ1);
  REQUIRE(occ2);
  REQUIRE(g12);
  REQUIRE(t2);
  CHECK(occ1->count == 210);   // C(6+4, 4)
  CHECK(occ2->count == 1001);  // C(10+4, 4)
  CHECK(g12->count == 70);     // C(4+4, 4)
  CHECK(t2->count == 495);     // C(8+4, 4)
  CHECK(rp.layout.total == 210 + 1001 + 70 + 495);
  CHECK(rp.conic.num_scalars == rp.layout.total);

  // all links are upper-triangle and reference each block entry once
  std::set<std::tuple<int, int, int>> seen;
  for (int i = 0; i < rp.conic.num_equalities(); ++i) {
    for (const auto& mc : rp.conic.eq_lhs[i].mat) {
      CHECK(mc.row <= mc.col);
      CHECK(seen.insert({mc.block, mc.row, mc.col}).second);
    }
  }
}

TEST_CASE("liouville identities hold on simulated trajectories") {
  const HybridSystem chs = toy_two_mode();
  WindowCost wc;
  const Polynomial x = Polynomial::variable(2, 1);
  wc.terminal[2] = x * x;
  RelaxOptions opt;
  opt.zeta = 1.0;
  const auto rp = build_relaxation(chs, wc, 2, opt);

  std::mt19937 rng(99);
  std::uniform_real_distribution<double> cd(-0.6, 0.6);
  SimOptions tight;
  tight.abstol = 1e-12;
  tight.reltol = 1e-10;
  for (int trial = 0; trial < 10; ++trial) {
    // random polynomial control in t, clamped by the simulator
    const Polynomial u = Polynomial::from_terms(
        1, {{Monomial::one(), cd(rng)},
            {Monomial::var(0), cd(rng)},
            {Monomial::var(0, 2), cd(rng)}});
    const ControlFn fn = poly_control(u);
    const auto traj =
        simulate(chs, fn, chs.input_box, 1, chs.initial_state, 0.0, 1.0, tight);
    REQUIRE(traj.events.size() == 1);
    const Eigen::VectorXd y = empirical_moments(rp, chs, traj, fn);
    const double res = max_liouville_residual(rp, y);
    CHECK(res <= 1e-5);
  }
}

TEST_CASE("integrator toy: the relaxation bound is sound and monotone") {
  const HybridSystem chs = toy_integrator();
  const WindowCost wc = toy_target_cost();
  RelaxOptions opt;
  opt.zeta = 1.0;

  // simulate random controls for the soundness side
  std::mt19937 rng(31337);
  std::uniform_real_distribution<double> cd(-1.2, 1.2);
  std::vector<double> costs;
  SimOptions tight;
  tight.abstol = 1e-12;
  tight.reltol = 1e-10;
  for (int i = 0; i < 10; ++i) {
    const Polynomial u = Polynomial::from_terms(
        1, {{Monomial::one(), cd(rng)}, {Monomial::var(0), cd(rng)}});
    const auto traj = simulate(chs, poly_control(u), chs.input_box, 1,
                               chs.initial_state, 0.0, 1.0, tight);
    const Eigen::VectorXd xf = traj.final_state();
    costs.push_back((xf(1) - 1.0) * (xf(1) - 1.0));
  }
  const double best_sim = *std::min_element(costs.begin(), costs.end());

  double prev = -std::numeric_limits<double>::infinity();
  for (int d = 1; d <= 3; ++d) {
    const auto rp = build_relaxation(chs, wc, d, opt);
    const auto sol = solve(rp.conic, 1e-7);
    REQUIRE(sol.ok());
    const double bound = sol.objective;
    CHECK(bound <= best_sim + 1e-5);
    for (double c : costs) CHECK(bound <= c + 1e-5);
    CHECK(bound >= prev - 1e-6);  // monotone up to solver noise
    prev = bound;
    // reaching x(1) = 1 with u ~ 1 gives zero cost, so the bound is ~0
    CHECK(bound <= 1e-5);
    CHECK(bound >= -1e-5);
  }
}

TEST_CASE("degree overflow is rejected with the required order") {
  const HybridSystem chs = toy_integrator();
  WindowCost wc;
  // degree-6 terminal cost cannot fit at order 2
  Polynomial x = Polynomial::variable(2, 1);
  Polynomial p = x * x * x;
  wc.terminal[1] = p * p;
  RelaxOptions opt;
  opt.zeta = 1.0;
  CHECK_THROWS_WITH_AS(build_relaxation(chs, wc, 2, opt),
                       doctest::Contains("order 3"), std::invalid_argument);
}

TEST_CASE("the layout dump names every measure") {
  const HybridSystem chs = toy_two_mode();
  WindowCost wc;
  RelaxOptions opt;
  opt.zeta = 1.0;
  const auto rp = build_relaxation(chs, wc, 1, opt);
  const std::string dump = rp.dump();
  CHECK(dump.find("occ[1]") != std::string::npos);
  CHECK(dump.find("occ[2]") != std::string::npos);
  CHECK(dump.find("guard[1->2]") != std::string::npos);
  CHECK(dump.find("term[2]") != std::string::npos);
}
