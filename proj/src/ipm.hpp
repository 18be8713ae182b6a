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

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "momrev/sdp.hpp"

namespace momrev::detail {

/// Standard-form semidefinite program
///   (P) min sum_k <C_k, X_k> + cf'f   s.t. sum_k <A_ik, X_k> + (B f)_i = b_i,
///       X_k PSD, f free
///   (D) max b'y   s.t. sum_i y_i A_ik + Z_k = C_k, B'y = cf, Z_k PSD.
/// Constraints are stored densely: Astack[k] stacks the m symmetric
/// matrices A_ik vertically, (m*n_k) x n_k.
struct StdSdp {
  std::vector<int> dims;
  std::vector<Eigen::MatrixXd> C;
  std::vector<Eigen::MatrixXd> Astack;
  Eigen::VectorXd b;
  Eigen::MatrixXd B;   // m x nf (nf may be 0)
  Eigen::VectorXd cf;  // nf

  int m() const { return static_cast<int>(b.size()); }
  int nf() const { return static_cast<int>(cf.size()); }
  int total_dim() const;
};

struct StdSolution {
  SolveStatus status = SolveStatus::stalled;
  std::vector<Eigen::MatrixXd> X, Z;
  Eigen::VectorXd y, f;
  double pobj = 0, dobj = 0;
  double rel_primal = 0, rel_dual = 0, rel_gap = 0;
  int iterations = 0;
  std::string message;
};

/// Infeasible-start primal-dual interior-point method with
/// Nesterov-Todd scaling and a Mehrotra predictor-corrector step.
/// Deterministic: no randomization, single-threaded.
StdSolution ipm_solve(const StdSdp& prob, double tol, int max_iterations = 100);

}  // namespace momrev::detail
