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

#include "momrev/sdp.hpp"

namespace momrev {

/// Render the problem in sparse SDPA format (.dat-s): comment lines,
/// mDIM, nBLOCK, block sizes, the c vector, then 1-indexed
/// "matno blkno i j value" upper-triangle entries.
///
/// Problems whose equalities define the blocks from the scalars are
/// written as the equivalent reduced LMI  min c'x, sum x_i F_i - F0 >= 0
/// (mDIM = reduced scalar count); an "*OFFSET v" comment preserves the
/// affine objective offset for round trips. Problems without scalars are
/// written through the standard primal-dual correspondence (mDIM =
/// equality count); the file's optimal value is then the negative of the
/// problem's, which the header comment states.
std::string write_sdpa(const ConicProblem& problem);

/// Parse sparse SDPA text into the LMI interpretation: one scalar per
/// file variable, links X = sum x_i F_i - F0, objective min c'x (plus
/// any *OFFSET comment). Diagonal blocks (negative sizes) become 1x1
/// blocks.
ConicProblem read_sdpa(const std::string& text);

void write_sdpa_file(const ConicProblem& problem, const std::string& path);
ConicProblem read_sdpa_file(const std::string& path);

}  // namespace momrev
