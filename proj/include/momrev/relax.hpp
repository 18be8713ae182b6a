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
#include <optional>
#include <string>
#include <vector>

#include "momrev/chs.hpp"
#include "momrev/revise.hpp"
#include "momrev/sdp.hpp"

namespace momrev {

/// M_d(y)[a,b] = y_{alpha_a + alpha_b} over the graded basis; y holds
/// moments for all monomials of degree <= 2d in graded order.
Eigen::MatrixXd moment_matrix(const Eigen::VectorXd& y, int nvars, int d);

/// M_d(g y)[a,b] = sum_gamma g_gamma y_{alpha_a + alpha_b + gamma}; needs
/// moments up to degree 2d + deg(g).
Eigen::MatrixXd localizing_matrix(const Eigen::VectorXd& y,
                                  const Polynomial& g, int d);

enum class MeasureRole { occupation, initial, terminal, guard };

struct MeasureInfo {
  MeasureRole role = MeasureRole::occupation;
  int mode_id = -1;     // occupation / terminal
  int transition = -1;  // guard: index into the window's transition list
  int nvars = 0;
  int max_degree = 0;   // moments stored up to this total degree
  int offset = 0;       // first coordinate in the global moment vector
  int count = 0;
  std::string name;
};

struct MeasureLayout {
  std::vector<MeasureInfo> measures;
  int total = 0;

  const MeasureInfo* find(MeasureRole role, int mode_id,
                          int transition = -1) const;
};

/// Affine change of variables per mode: x = lo + width .* xhat
/// coordinatewise, with the clock slot scaled onto the window.
struct ModeScaling {
  Eigen::VectorXd lo;
  Eigen::VectorXd width;
};

struct WindowScaling {
  double t0 = 0, t1 = 1;
  std::map<int, ModeScaling> modes;  // by mode id
  Eigen::VectorXd input_scale;       // u = input_scale .* uhat
  double cost_scale = 1.0;           // built objective = true cost / cost_scale
};

struct RelaxOptions {
  double zeta = 0.1;        // input scale factor per coordinate
  double cost_scale = 1.0;  // divide the objective by this while building
};

/// The order-d moment relaxation of one window's optimal control
/// problem, ready for the conic solver. Blocks are the moment and
/// localizing matrices of the layout; the equalities are the entry
/// links, the Liouville identities, and the terminal mass
/// normalization.
struct RelaxationProblem {
  MeasureLayout layout;
  ConicProblem conic;
  int order = 0;
  int test_degree = 0;  // max degree of the Liouville test monomials
  WindowScaling scaling;
  HybridSystem window;  // original-units window system (provenance)

  std::string dump() const;
};

/// Compile the window problem into its moment relaxation over per-mode
/// occupation measures, guard measures on the transitions, a Dirac
/// initial measure (folded into the right-hand sides) and terminal
/// measures on the window's final modes.
RelaxationProblem build_relaxation(const HybridSystem& window_chs,
                                   const WindowCost& cost, int order,
                                   const RelaxOptions& opt = {});

/// Per-mode truncated moments of the occupation measures, in scaled
/// variables, as synthesized control extraction consumes them.
struct ModeMoments {
  int mode_id = 0;
  int dim = 0;     // mode state dimension (including the clock)
  int inputs = 0;
  int order = 0;
  Eigen::VectorXd y;  // moments over (that, xhat, uhat) up to degree 2*order
};

struct MomentData {
  std::vector<ModeMoments> modes;
  WindowScaling scaling;
  Box input_box;  // original units
};

MomentData extract_moments(const RelaxationProblem& rp,
                           const ConicSolution& sol);

/// Static box-constrained polynomial minimization as a one-measure
/// moment relaxation: min integral(objective) over probability measures
/// on the box. The order-d lower bound of min_x objective(x).
RelaxationProblem build_static_relaxation(const Polynomial& objective,
                                          const Box& box, int order);

}  // namespace momrev
