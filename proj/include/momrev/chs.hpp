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

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "momrev/poly.hpp"

namespace momrev {

/// Axis-aligned box with finite bounds; intervals may be degenerate
/// (lo == hi), which is how clock guards t == c are expressed.
struct Box {
  std::vector<std::pair<double, double>> bounds;

  int dim() const { return static_cast<int>(bounds.size()); }
  bool contains(const Eigen::VectorXd& x, double tol = 0.0) const;
  bool intersects(const Box& other) const;
  double lo(int i) const { return bounds[i].first; }
  double hi(int i) const { return bounds[i].second; }

  static Box cube(int dim, double lo, double hi);
};

struct AffineMap {
  Eigen::MatrixXd A;
  Eigen::VectorXd b;

  Eigen::VectorXd operator()(const Eigen::VectorXd& x) const { return A * x + b; }
  static AffineMap identity(int dim);
};

/// A continuous mode. Variables are (t, x1..x_{dim-1}) with the clock at
/// index 0 for time-extended systems; dynamics rows live on the mode
/// variables plus the trailing input block and must be affine in it.
struct Mode {
  int id = 0;          // stable external id (1-based in the case studies)
  int dim = 0;         // number of continuous variables including the clock
  Box domain;          // over the mode variables
  std::vector<Polynomial> dynamics;   // dim rows on (vars..., inputs...)
  Polynomial running_cost;            // on (vars..., inputs...); zero if unset
  Polynomial terminal_cost;           // on vars; zero if unset
  std::optional<Box> target;          // X_T slice; whole domain when unset
  std::vector<std::string> tags;

  bool has_tag(const std::string& tag) const;
  std::pair<double, double> time_window() const { return domain.bounds.at(0); }
};

struct Transition {
  int from = 0;
  int to = 0;
  Box guard;        // subset of the source domain; clock guards pin index 0
  AffineMap reset;  // source variables -> destination variables

  /// The pinned clock value when the guard is a time trigger.
  std::optional<double> clock_value() const;
};

struct Diagnostic {
  std::string code;
  std::string message;
  int mode = -1;        // external mode id when applicable
  int transition = -1;  // index into transitions when applicable
};

/// Controlled hybrid system: modes with polynomial dynamics affine in a
/// shared input, guarded transitions with affine resets, a compact input
/// box and a point initial condition.
struct HybridSystem {
  std::string name;
  std::vector<Mode> modes;
  std::vector<Transition> transitions;
  Box input_box;             // U
  int initial_mode = 0;      // external id
  Eigen::VectorXd initial_state;
  Polynomial measurement;    // m(x) on the measurable modes; zero if unset
  std::vector<int> source_mode_ids;  // provenance of restrict(); empty if original

  int num_inputs() const { return input_box.dim(); }
  const Mode& mode(int id) const;
  int mode_pos(int id) const;
  std::vector<const Transition*> transitions_from(int id) const;
  std::vector<const Transition*> transitions_into(int id) const;
  double horizon_start() const;
  double horizon_end() const;

  /// True when every transition guard pins only the clock variable, so
  /// the mode schedule is a function of time alone.
  bool time_triggered() const;
};

/// Structural validation of the definition's assumptions: pairwise
/// disjoint guards per source mode, guards on the domain boundary, the
/// initial state inside the initial domain, input-affine dynamics and
/// consistent dimensions. Returns one diagnostic per violation.
std::vector<Diagnostic> validate(const HybridSystem& chs);

/// Mode active at time t for a time-triggered system. Windows are
/// left-closed, right-open; the final window is closed.
int mode_at(const HybridSystem& chs, double t);

/// Sub-system visited on [t_a, t_b]: retained modes have their time
/// window clipped to the span, transitions interior to the span are
/// kept, and the initial mode becomes mode_at(t_a). Retained modes keep
/// their external ids; source_mode_ids records them in schedule order.
HybridSystem restrict_system(const HybridSystem& chs, double t_a, double t_b);

}  // namespace momrev
