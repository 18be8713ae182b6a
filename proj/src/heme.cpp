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

#include "momrev/heme.hpp"

namespace momrev::heme {

namespace {

// Upper bounds, atoms/fL, covering the reachable set under any constant
// admissible input over the full protocol (numerically probed maxima
// with margin: 1430, 67, 16, 59, 45360, 4360, 16, 3190).
constexpr double kX1Max = 1600.0;
constexpr double kX2Max = 100.0;
constexpr double kX3Max = 20.0;
constexpr double kX4Max = 100.0;
constexpr double kX5Max = 50000.0;
constexpr double kX6Max = 6000.0;
constexpr double kX7Max = 20.0;
constexpr double kX8Max = 5000.0;

constexpr double kModeEdges[] = {0,  4,  7,  8,  11, 16, 19, 24,
                                 27, 32, 35, 42, 45, 52, 55};
constexpr int kModeCount = 14;

}  // namespace

std::vector<Polynomial> vector_field(FieldKind kind, const Parameters& p) {
  const double k1 = p.k1 * kSecondsPerHour;
  const double k4 = p.k4 * kSecondsPerHour;
  const double k5 = p.k5 * kSecondsPerHour;
  const double k6 = p.k6 * kSecondsPerHour;
  const double k8 = p.k8 * kSecondsPerHour;

  const int dim = kind == FieldKind::ctrl ? 5 : 9;
  const int na = dim + 1;  // one input
  auto X = [na](int i) { return Polynomial::variable(na, i); };
  const Polynomial u = X(na - 1);
  auto K = [na](double c) { return Polynomial::constant(na, c); };

  std::vector<Polynomial> f;
  f.reserve(dim);
  f.push_back(K(1.0));                          // clock
  f.push_back(K(k1 * p.fe_ex) - u * X(1));      // iron
  f.push_back(-k4 * X(2) - 4.0 * k5 * X(2) * X(3) + u * X(1));  // heme
  f.push_back(k6 * X(2) - 4.0 * k5 * X(2) * X(3));              // globin
  f.push_back(k5 * X(2) * X(3) - k8 * X(4));                    // haemoglobin
  if (kind == FieldKind::rad) {
    f.push_back(K(k1 * p.fe59_ex) - u * X(5));
    f.push_back(-k4 * X(6) - 4.0 * k5 * X(6) * X(7) + u * X(5));
    // total globin: production and consumption driven by total heme
    f.push_back(k6 * (X(2) + X(6)) - 4.0 * k5 * (X(2) + X(6)) * X(7));
    f.push_back(k5 * X(6) * X(7) - k8 * X(8));
  }
  return f;
}

HybridSystem build(const Parameters& p) {
  HybridSystem chs;
  chs.name = "heme";
  chs.input_box.bounds = {{0.0, 1.0}};

  const std::vector<std::pair<double, double>> ctrl_state = {
      {0, kX1Max}, {0, kX2Max}, {0, kX3Max}, {0, kX4Max}};
  const std::vector<std::pair<double, double>> rad_state = {
      {0, kX1Max}, {0, kX2Max}, {0, kX3Max}, {0, kX4Max},
      {0, kX5Max}, {0, kX6Max}, {0, kX7Max}, {0, kX8Max}};

  const auto f_ctrl = vector_field(FieldKind::ctrl, p);
  const auto f_rad = vector_field(FieldKind::rad, p);

  for (int i = 0; i < kModeCount; ++i) {
    const bool rad = (i % 2 == 1);
    Mode m;
    m.id = i + 1;
    m.dim = rad ? 9 : 5;
    m.domain.bounds.push_back({kModeEdges[i], kModeEdges[i + 1]});
    const auto& state = rad ? rad_state : ctrl_state;
    m.domain.bounds.insert(m.domain.bounds.end(), state.begin(), state.end());
    m.dynamics = rad ? f_rad : f_ctrl;
    m.running_cost = Polynomial::zero(m.dim + 1);
    m.terminal_cost = Polynomial::zero(m.dim);
    m.tags = {rad ? "radioactive" : "control"};
    chs.modes.push_back(std::move(m));
  }

  for (int i = 0; i < kModeCount - 1; ++i) {
    const bool entering_rad = (i % 2 == 0);
    Transition tr;
    tr.from = i + 1;
    tr.to = i + 2;
    const double c = kModeEdges[i + 1];
    tr.guard = chs.modes[i].domain;
    tr.guard.bounds[0] = {c, c};
    if (entering_rad) {
      // append four zeroed radioactive coordinates
      tr.reset.A = Eigen::MatrixXd::Zero(9, 5);
      tr.reset.A.topLeftCorner(5, 5).setIdentity();
      tr.reset.b = Eigen::VectorXd::Zero(9);
    } else {
      // project the radioactive block away
      tr.reset.A = Eigen::MatrixXd::Zero(5, 9);
      tr.reset.A.topLeftCorner(5, 5).setIdentity();
      tr.reset.b = Eigen::VectorXd::Zero(5);
    }
    chs.transitions.push_back(std::move(tr));
  }

  chs.initial_mode = 1;
  chs.initial_state = Eigen::VectorXd::Zero(5);
  chs.initial_state(1) = p.fe0;

  // total radioactive heme: free plus four atoms per haemoglobin
  chs.measurement = Polynomial::from_terms(
      9, {{Monomial::var(6), 1.0}, {Monomial::var(8), 4.0}});
  return chs;
}

std::vector<DataPoint> data() {
  const HybridSystem chs = build();
  const std::vector<std::pair<double, double>> raw = {
      {7, 16}, {11, 85}, {19, 348}, {27, 391}, {35, 399}, {45, 481}, {55, 395}};
  std::vector<DataPoint> out;
  out.reserve(raw.size());
  for (const auto& [t, z] : raw) out.push_back({t, z, chs.measurement});
  return out;
}

}  // namespace momrev::heme
