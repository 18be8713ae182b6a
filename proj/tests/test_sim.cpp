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

#include "momrev/heme.hpp"
#include "momrev/sim.hpp"

using namespace momrev;

namespace {

// single mode, single state: (t, x) with dx/dt given
HybridSystem scalar_system(const Polynomial& fx, double t1, double xlo,
                           double xhi, double ulo = -1.0, double uhi = 1.0) {
  HybridSystem chs;
  chs.name = "scalar";
  chs.input_box.bounds = {{ulo, uhi}};
  Mode m;
  m.id = 1;
  m.dim = 2;
  m.domain.bounds = {{0.0, t1}, {xlo, xhi}};
  m.dynamics = {Polynomial::constant(3, 1.0), fx};
  m.running_cost = Polynomial::zero(3);
  m.terminal_cost = Polynomial::zero(2);
  chs.modes.push_back(m);
  chs.initial_mode = 1;
  chs.initial_state = Eigen::VectorXd::Zero(2);
  return chs;
}

ControlFn constant_control(double u) {
  return [u](int, double, const Eigen::VectorXd&) {
    Eigen::VectorXd v(1);
    v << u;
    return v;
  };
}

}  // namespace

TEST_CASE("linear decay endpoint accuracy") {
  // dx/dt = -x, x(0) = 1 -> x(5) = e^-5
  auto fx = -Polynomial::variable(3, 1);
  HybridSystem chs = scalar_system(fx, 5.0, -0.5, 2.0);
  chs.initial_state << 0.0, 1.0;
  SimOptions tight;
  tight.abstol = 1e-13;
  tight.reltol = 1e-11;
  auto traj = simulate(chs, constant_control(0.0), chs.input_box, 1,
                       chs.initial_state, 0.0, 5.0, tight);
  const double expect = std::exp(-5.0);
  CHECK(std::abs(traj.final_state()(1) - expect) <= 1e-9 * expect);
}

TEST_CASE("forced scalar system approaches a/u") {
  // dx/dt = a - u*x with constant u: x(t) = a/u + (x0 - a/u) e^{-u t}
  const double a = 2.0, u = 0.8, T = 6.0;
  auto fx = Polynomial::constant(3, a) -
            Polynomial::variable(3, 2) * Polynomial::variable(3, 1);
  HybridSystem chs = scalar_system(fx, T, -1.0, 5.0, 0.0, 1.0);
  SimOptions tight;
  tight.abstol = 1e-12;
  tight.reltol = 1e-10;
  auto traj = simulate(chs, constant_control(u), chs.input_box, 1,
                       chs.initial_state, 0.0, T, tight);
  const double expect = a / u + (0.0 - a / u) * std::exp(-u * T);
  CHECK(std::abs(traj.final_state()(1) - expect) <=
        1e-8 * std::abs(expect));
}

TEST_CASE("zero-input iron uptake is a straight line") {
  const heme::Parameters p;
  const HybridSystem chs = heme::build(p);
  auto traj = simulate(chs, constant_control(0.0), chs.input_box, 1,
                       chs.initial_state, 0.0, 4.0);
  const double slope = p.k1 * heme::kSecondsPerHour * p.fe_ex;
  for (double t : {0.5, 1.0, 2.0, 3.7, 4.0}) {
    const Eigen::VectorXd x = traj.state_at(t);
    const double expect = p.fe0 + slope * t;
    CHECK(std::abs(x(1) - expect) <= 1e-8 * expect);
    CHECK(std::abs(x(2)) <= 1e-10);
    CHECK(std::abs(x(3)) <= 1e-10);
    CHECK(std::abs(x(4)) <= 1e-10);
  }
}

TEST_CASE("clock event fires once with an exact reset") {
  const HybridSystem chs = heme::build();
  auto traj = simulate(chs, constant_control(0.0), chs.input_box, 1,
                       chs.initial_state, 0.0, 5.0);
  REQUIRE(traj.events.size() == 1);
  CHECK(std::abs(traj.events[0].time - 4.0) <= 1e-9);
  CHECK(traj.events[0].from_mode == 1);
  CHECK(traj.events[0].to_mode == 2);
  REQUIRE(traj.events[0].state_after.size() == 9);
  CHECK(traj.events[0].state_after.tail(4).isZero(0.0));
  CHECK(traj.events[0].state_after.head(5)
            .isApprox(traj.events[0].state_before, 0.0));
  CHECK(traj.mode_at(4.5) == 2);
}

TEST_CASE("a transition scheduled exactly at the span end is not taken") {
  const HybridSystem chs = heme::build();
  auto traj = simulate(chs, constant_control(0.1), chs.input_box, 1,
                       chs.initial_state, 0.0, 4.0);
  CHECK(traj.events.empty());
  CHECK(traj.final_mode() == 1);
  CHECK(traj.final_state().size() == 5);
}

TEST_CASE("state guards localize by bisection") {
  // dx/dt = 1 starting at x = 0; guard at x == 0.6180339887 in a
  // two-mode system, second mode frozen.
  HybridSystem chs;
  chs.input_box.bounds = {{0.0, 1.0}};
  Mode m1;
  m1.id = 1;
  m1.dim = 2;
  m1.domain.bounds = {{0.0, 2.0}, {0.0, 0.6180339887}};
  m1.dynamics = {Polynomial::constant(3, 1.0), Polynomial::constant(3, 1.0)};
  Mode m2 = m1;
  m2.id = 2;
  m2.domain.bounds = {{0.0, 2.0}, {0.0, 10.0}};
  m2.dynamics = {Polynomial::constant(3, 1.0), Polynomial::zero(3)};
  chs.modes = {m1, m2};
  Transition tr;
  tr.from = 1;
  tr.to = 2;
  tr.guard.bounds = {{0.0, 2.0}, {0.6180339887, 0.6180339887}};
  tr.reset = AffineMap::identity(2);
  chs.transitions = {tr};
  chs.initial_mode = 1;
  chs.initial_state = Eigen::VectorXd::Zero(2);

  auto traj = simulate(chs, constant_control(0.0), chs.input_box, 1,
                       chs.initial_state, 0.0, 2.0);
  REQUIRE(traj.events.size() == 1);
  CHECK(std::abs(traj.events[0].time - 0.6180339887) <= 1e-8);
  CHECK(std::abs(traj.final_state()(1) - 0.6180339887) <= 1e-8);
}

TEST_CASE("saturation clamps the applied input everywhere") {
  // control asks for 3.0; box is [0, 1]: trajectory must follow u = 1
  const double a = 2.0, T = 2.0;
  auto fx = Polynomial::constant(3, a) -
            Polynomial::variable(3, 2) * Polynomial::variable(3, 1);
  HybridSystem chs = scalar_system(fx, T, -1.0, 5.0, 0.0, 1.0);
  SimOptions tight;
  tight.abstol = 1e-12;
  tight.reltol = 1e-10;
  auto traj = simulate(chs, constant_control(3.0), chs.input_box, 1,
                       chs.initial_state, 0.0, T, tight);
  const double expect = a / 1.0 * (1.0 - std::exp(-T));
  CHECK(std::abs(traj.final_state()(1) - expect) <= 1e-8 * expect);
  for (const auto& seg : traj.segments)
    for (const auto& st : seg.steps) CHECK(st.u0(0) == 1.0);
}

TEST_CASE("replaying a simulation is bitwise deterministic") {
  const HybridSystem chs = heme::build();
  auto t1 = simulate(chs, constant_control(0.05), chs.input_box, 1,
                     chs.initial_state, 0.0, 11.0);
  auto t2 = simulate(chs, constant_control(0.05), chs.input_box, 1,
                     chs.initial_state, 0.0, 11.0);
  REQUIRE(t1.segments.size() == t2.segments.size());
  const std::string csv1 = trajectory_csv(chs, t1);
  const std::string csv2 = trajectory_csv(chs, t2);
  CHECK(csv1 == csv2);
  REQUIRE(t1.events.size() == t2.events.size());
  for (std::size_t i = 0; i < t1.events.size(); ++i)
    CHECK(t1.events[i].time == t2.events[i].time);
}

TEST_CASE("measurement evaluation checks the mode's variables") {
  const HybridSystem chs = heme::build();
  auto traj = simulate(chs, constant_control(0.02), chs.input_box, 1,
                       chs.initial_state, 0.0, 7.0);
  // m = x6 + 4 x8 works in the radioactive mode
  const double v = evaluate_measurement(chs, traj, chs.measurement, 6.0);
  CHECK(std::isfinite(v));
  CHECK(v > 0.0);
  // constant measurement works anywhere
  const double c = evaluate_measurement(
      chs, traj, Polynomial::constant(1, 5.0), 2.0);
  CHECK(c == 5.0);
  // x6 is absent in a control mode
  CHECK_THROWS_AS(evaluate_measurement(chs, traj, chs.measurement, 2.0),
                  std::invalid_argument);
}

TEST_CASE("a trapped domain exit is reported with time and state") {
  // dx/dt = 1 with a ceiling and no transition
  auto fx = Polynomial::constant(3, 1.0);
  HybridSystem chs = scalar_system(fx, 10.0, 0.0, 1.0);
  try {
    simulate(chs, constant_control(0.0), chs.input_box, 1, chs.initial_state,
             0.0, 10.0);
    FAIL("expected SimulationError");
  } catch (const SimulationError& e) {
    CHECK(e.time > 0.9);
    CHECK(e.time < 1.3);
    CHECK(e.state(1) >= 1.0 - 1e-6);
  }
}

TEST_CASE("trajectory integral matches closed forms") {
  // integral of x over [0,5] for dx/dt = -x, x0 = 1: 1 - e^-5
  auto fx = -Polynomial::variable(3, 1);
  HybridSystem chs = scalar_system(fx, 5.0, -0.5, 2.0);
  chs.initial_state << 0.0, 1.0;
  SimOptions tight;
  tight.abstol = 1e-12;
  tight.reltol = 1e-10;
  auto traj = simulate(chs, constant_control(0.0), chs.input_box, 1,
                       chs.initial_state, 0.0, 5.0, tight);
  std::map<int, Polynomial> h;
  h[1] = Polynomial::variable(3, 1);  // integrand x
  const double got =
      trajectory_integral(chs, traj, h, constant_control(0.0), chs.input_box);
  CHECK(std::abs(got - (1.0 - std::exp(-5.0))) <= 1e-8);
}

TEST_CASE("csv export uses 17 significant digits") {
  auto fx = -Polynomial::variable(3, 1);
  HybridSystem chs = scalar_system(fx, 1.0, -0.5, 2.0);
  chs.initial_state << 0.0, 1.0;
  auto traj = simulate(chs, constant_control(0.0), chs.input_box, 1,
                       chs.initial_state, 0.0, 1.0);
  const std::string csv = trajectory_csv(chs, traj);
  CHECK(csv.rfind("t,mode,x0,x1,u0\n", 0) == 0);
  // a third-of-something value must round-trip exactly
  std::istringstream is(csv);
  std::string line;
  std::getline(is, line);  // header
  std::getline(is, line);
  // parse back the first state value
  const auto p1 = line.find(',');
  const auto p2 = line.find(',', p1 + 1);
  const auto p3 = line.find(',', p2 + 1);
  const double x0 = std::stod(line.substr(p2 + 1, p3 - p2 - 1));
  CHECK(x0 == traj.segments[0].steps[0].c1(0));
}
