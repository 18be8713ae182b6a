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

#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "momrev/chs.hpp"
#include "momrev/poly.hpp"

namespace momrev {

/// Control evaluated by the simulator: mode id, time and current state
/// to raw (pre-saturation) input values.
using ControlFn =
    std::function<Eigen::VectorXd(int mode, double t, const Eigen::VectorXd&)>;

/// Piecewise polynomial feedback: per revision window, per mode, one
/// polynomial per input dimension on the mode's (t, x) variables.
/// Evaluation clamps into the saturation box; (window, mode) pairs with
/// no entry evaluate to zero before clamping.
struct PolynomialControl {
  struct Window {
    double t0 = 0, t1 = 0;
    std::map<int, std::vector<Polynomial>> by_mode;
  };

  Box saturation;
  std::vector<Window> windows;

  Eigen::VectorXd eval(int mode, double t, const Eigen::VectorXd& x) const;
  ControlFn as_fn() const;
  Eigen::VectorXd clamp(const Eigen::VectorXd& u) const;
};

/// One accepted integrator step with its dense-output coefficients; the
/// interpolant matches the integrator's order on [t0, t1].
struct TrajectoryStep {
  double t0 = 0, t1 = 0;
  Eigen::VectorXd c1, c2, c3, c4, c5;  // dense output stencil
  Eigen::VectorXd u0;                  // applied (saturated) input at t0

  Eigen::VectorXd interpolate(double t) const;
};

struct EventRecord {
  double time = 0;
  int transition = -1;  // index into the system's transition list
  int from_mode = 0, to_mode = 0;
  Eigen::VectorXd state_before, state_after;
};

struct TrajectorySegment {
  int mode_id = 0;
  std::vector<TrajectoryStep> steps;
};

/// Simulated hybrid trajectory: one segment per visited mode plus the
/// event log. States interpolate through the stored dense output.
struct HybridTrajectory {
  std::vector<TrajectorySegment> segments;
  std::vector<EventRecord> events;
  double start_time = 0, end_time = 0;

  int mode_at(double t) const;
  Eigen::VectorXd state_at(double t) const;
  Eigen::VectorXd final_state() const;
  int final_mode() const;

  /// Appends another trajectory that starts where this one ends.
  void append(const HybridTrajectory& tail);
};

struct SimOptions {
  double abstol = 1e-9;
  double reltol = 1e-7;
  double tau_event = 1e-9;   // event localization tolerance
  double tau_domain = 1e-6;  // slack before declaring a domain exit
  double h_init = 1e-3;
  double h_min = 1e-13;
  std::size_t max_steps = 2000000;
};

/// Simulation failure carrying the exit time and state.
class SimulationError : public std::runtime_error {
 public:
  SimulationError(const std::string& msg, double time,
                  const Eigen::VectorXd& state)
      : std::runtime_error(msg), time(time), state(state) {}
  double time;
  Eigen::VectorXd state;
};

/// Integrate the controlled hybrid system from (start_mode, start_state)
/// over [t0, t1] under the given control (clamped into U pointwise).
/// Adaptive Dormand-Prince 5(4) with dense output; clock guards are hit
/// by exact step capping, single-coordinate state guards by sign change
/// plus bisection. A transition scheduled exactly at t1 is not taken, so
/// the final state is the left limit in the source mode.
HybridTrajectory simulate(const HybridSystem& chs, const ControlFn& control,
                          const Box& saturation, int start_mode,
                          const Eigen::VectorXd& start_state, double t0,
                          double t1, const SimOptions& opt = {});

HybridTrajectory simulate(const HybridSystem& chs,
                          const PolynomialControl& control, int start_mode,
                          const Eigen::VectorXd& start_state, double t0,
                          double t1, const SimOptions& opt = {});

/// m evaluated at the interpolated state at time t. Throws when m needs
/// variables the active mode does not carry.
double evaluate_measurement(const HybridSystem& chs,
                            const HybridTrajectory& traj, const Polynomial& m,
                            double t);

/// Integral over the trajectory of h(t, x(t), u(t)) per mode, where
/// each mode's integrand is given on its (vars..., inputs...) space;
/// missing mode entries contribute zero. Gauss quadrature on the dense
/// output with the control re-evaluated at the nodes.
double trajectory_integral(const HybridSystem& chs,
                           const HybridTrajectory& traj,
                           const std::map<int, Polynomial>& h_by_mode,
                           const ControlFn& control, const Box& saturation);

/// Trajectory CSV: header t,mode,x0..,u0.. padded to the widest mode;
/// 17 significant digits. The event log goes to a separate CSV.
std::string trajectory_csv(const HybridSystem& chs,
                           const HybridTrajectory& traj);
std::string events_csv(const HybridTrajectory& traj);

}  // namespace momrev
