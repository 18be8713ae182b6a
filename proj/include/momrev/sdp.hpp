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

#include <Eigen/Dense>

namespace momrev {

enum class SolveStatus { optimal, near_optimal, infeasible, unbounded, stalled };

std::string to_string(SolveStatus s);

/// Reference to one entry of a symmetric block variable, upper triangle
/// (row <= col). The coefficient applies to the entry's value once, not
/// to its mirrored copy.
struct MatCoeff {
  int block = 0;
  int row = 0, col = 0;
  double value = 0;
};

struct ScalarCoeff {
  int index = 0;
  double value = 0;
};

/// Linear functional over the problem variables (symmetric PSD block
/// entries plus free scalars) with an optional constant offset.
struct LinearExpr {
  std::vector<MatCoeff> mat;
  std::vector<ScalarCoeff> scalar;
  double constant = 0;
};

/// Minimization over PSD blocks and free scalars subject to linear
/// equalities:
///   min  <objective, (X, s)>
///   s.t. <eq_lhs[i], (X, s)> = eq_rhs[i],  X_k symmetric PSD, s free.
struct ConicProblem {
  std::string name;
  std::vector<int> block_dims;
  int num_scalars = 0;
  LinearExpr objective;
  std::vector<LinearExpr> eq_lhs;
  std::vector<double> eq_rhs;
  // metadata: human names for problem coordinates (moment indices etc.)
  std::vector<std::string> scalar_names;
  std::vector<std::string> block_names;
  std::vector<std::string> eq_names;

  void add_equality(LinearExpr lhs, double rhs);
  int num_equalities() const { return static_cast<int>(eq_lhs.size()); }

  /// Structural check: all referenced coordinates exist, upper-triangle
  /// convention respected. Empty string when well formed.
  std::string check() const;
};

struct ConicSolution {
  SolveStatus status = SolveStatus::stalled;
  std::vector<Eigen::MatrixXd> blocks;  // primal block values
  Eigen::VectorXd scalars;              // primal scalar values
  Eigen::VectorXd eq_duals;             // one multiplier per equality
  double objective = 0;                 // primal objective at the solution
  double dual_objective = 0;
  double primal_residual = 0;           // relative equality violation
  double dual_residual = 0;             // relative dual feasibility violation
  double gap = 0;                       // relative primal-dual gap
  int iterations = 0;
  std::string message;

  bool ok() const {
    return status == SolveStatus::optimal || status == SolveStatus::near_optimal;
  }
};

struct SolverOptions {
  double tol = 1e-7;
  int max_iterations = 100;
  // guard against runaway memory in the dense constraint representation
  double max_gigabytes = 3.0;
};

/// Solve the conic problem with the embedded primal-dual interior-point
/// method. Problems whose equalities define every block entry as an
/// affine function of the scalars (the shape every moment relaxation
/// has) are internally reduced to a linear matrix inequality over the
/// scalars; other problems are solved in the given form. Numerical
/// failure is reported through the status, never by crashing.
ConicSolution solve(const ConicProblem& problem, const SolverOptions& opt = {});
inline ConicSolution solve(const ConicProblem& problem, double tol) {
  SolverOptions opt;
  opt.tol = tol;
  return solve(problem, opt);
}

/// <expr, (blocks, scalars)> + constant.
double eval_expr(const LinearExpr& expr,
                 const std::vector<Eigen::MatrixXd>& blocks,
                 const Eigen::VectorXd& scalars);

}  // namespace momrev
