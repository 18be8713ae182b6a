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

#pragma once

#include <map>
#include <string>
#include <vector>

#include "momrev/chs.hpp"
#include "momrev/sim.hpp"

namespace momrev {

/// One experimental reference: measurement value z at time T with the
/// measurement polynomial m(x) it was read through.
struct DataPoint {
  double time = 0;
  double value = 0;
  Polynomial measurement;
};

struct RevisionConfig {
  double epsilon = 0.0;     // acceptance threshold; 0 means never
                            // early-accept, keep the best at max orders
  int start_order = 2;      // first relaxation order r
  int max_order = 4;        // relaxation order cap
  double zeta = 0.1;        // input scale u = zeta * u_hat
  double c1_weight = 0.01;  // c1 = (w1*u)^2 on penalized modes
  double c2_weight = 1.0;   // c2 = w2*(u(T_{j-1}) - u)^2 from window 2 on
  double solver_tol = 1e-7;
  std::string penalty_tag = "radioactive";
  SimOptions sim;
};

/// Per-mode cost specification for one revision window.
struct WindowCost {
  std::map<int, Polynomial> running;   // h_i on (vars..., inputs...)
  std::map<int, Polynomial> terminal;  // H_i on vars
};

struct WindowReport {
  int index = 0;          // 1-based data point index
  double t0 = 0, t1 = 0;
  int order_used = 0;     // d_r of the retained control
  int degree_used = 0;    // d_u of the retained control
  double lower_bound = 0; // J_lower at the last solved order, original units
  double err = 0;         // H(x(T_j)) achieved by the retained control
  double running_cost = 0;  // integral of h along the retained simulation
  bool solved = false;
  bool kept_previous = false;  // the certified-unreachable branch was taken
  bool failed = false;         // relaxation or simulation failure; zero control
  std::string note;
  double wall_seconds = 0;  // informational only; never exported
};

struct RevisionResult {
  std::vector<WindowReport> windows;
  PolynomialControl control;
  HybridTrajectory trajectory;
  double eps_total = 0;
};

/// Running and terminal costs for window j (1-based): the data-misfit
/// terminal cost (m(x) - z_j)^2 on the window's final mode, the input
/// penalization (w1*u)^2 on modes carrying the penalty tag, and the
/// continuation penalty w2*(u_prev_end - u)^2 on every mode from the
/// second window on.
WindowCost window_cost(const HybridSystem& window_chs, const DataPoint& point,
                       int j, double u_prev_end, const RevisionConfig& cfg);

/// Normalized total residual: sum_j sqrt(H(x(T_j))) / sum_j z_j.
double total_error(const HybridSystem& chs, const HybridTrajectory& traj,
                   const std::vector<DataPoint>& data);

/// The greedy revision driver: per data point, build and solve the
/// window relaxation, synthesize the lowest acceptable-degree control,
/// validate by simulation, and chain the simulated endpoint into the
/// next window. Failed windows degrade to zero control and the loop
/// continues.
RevisionResult run(const HybridSystem& chs, const std::vector<DataPoint>& data,
                   const RevisionConfig& cfg = {});

/// Re-simulate a control over the data schedule, window by window (the
/// exact replay used to finalize a revision); returns the concatenated
/// trajectory.
HybridTrajectory replay(const HybridSystem& chs,
                        const PolynomialControl& control,
                        const std::vector<DataPoint>& data,
                        const SimOptions& opt = {});
HybridTrajectory replay(const HybridSystem& chs, const ControlFn& control,
                        const Box& saturation,
                        const std::vector<DataPoint>& data,
                        const SimOptions& opt = {});

/// Structured revision report (JSON text): per-window orders, bounds,
/// errors and flags, plus the total residual. Deterministic content.
std::string revision_report_json(const RevisionResult& result,
                                 const std::vector<DataPoint>& data);

}  // namespace momrev
