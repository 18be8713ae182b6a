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

/// One affine block entry: value = constant + coeffs' f.
struct EntryExpr {
  double constant = 0;
  std::vector<ScalarCoeff> coeffs;
  int link = -1;  // index of the defining equality
};

/// The problem rewritten as a linear matrix inequality over a reduced
/// free vector z:
///   min c'z + offset   s.t.  X_k(z) = F0_k + sum_j z_j F_kj  PSD,
/// with the original scalars recovered as f = ypart + N z. Produced when
/// every block entry is defined by exactly one equality as an affine
/// function of the scalars (the shape of every moment relaxation).
struct LmiForm {
  bool ok = false;
  bool inconsistent = false;  // scalar equalities have no solution
  std::string note;

  std::vector<int> dims;
  std::vector<Eigen::MatrixXd> F0;
  // Fstack[k] stacks F_kj vertically: (mz * n_k) x n_k
  std::vector<Eigen::MatrixXd> Fstack;
  Eigen::VectorXd c;
  double offset = 0;

  Eigen::VectorXd ypart;
  Eigen::MatrixXd N;
  Eigen::MatrixXd E;  // scalar-equality matrix (for dual recovery)
  std::vector<int> scalar_eqs;
  std::vector<std::vector<EntryExpr>> entries;  // [block][row*n+col]

  int mz() const { return static_cast<int>(N.cols()); }
};

/// Attempt the rewrite; lf.ok tells whether the problem has the shape.
LmiForm to_lmi(const ConicProblem& p);

}  // namespace momrev::detail
