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

#include <vector>

#include "momrev/chs.hpp"
#include "momrev/revise.hpp"

namespace momrev::heme {

/// Rate constants of the haemoglobin production model, in per-second
/// units; the builder converts them to the protocol's hour clock. k2 and
/// k7 are fixed to zero and do not appear in the vector fields.
struct Parameters {
  double k1 = 1.4e-3;    // 1/s, iron uptake
  double k4 = 4.47e-4;   // 1/s, heme decay
  double k5 = 7.27e-6;   // fL/(molecules*s), haemoglobin assembly
  double k6 = 4.47e-4;   // 1/s, globin production
  double k8 = 1.14e-5;   // 1/s, haemoglobin decay
  double fe0 = 321.0;    // atoms/fL, initial internal iron
  double fe_ex = 4.0;    // atoms/fL, external iron
  double fe59_ex = 3000.0;  // atoms/fL, external radioactive iron
};

/// Hours per protocol clock unit times seconds per hour: the single
/// rate-unit conversion applied when building the hybrid system.
inline constexpr double kSecondsPerHour = 3600.0;

/// Input scale suited to this model: the fitted uptake parameter lives
/// around 1e-3..1e-2, so u = zeta*u_hat with zeta = 0.02 puts the
/// rescaled control near unit magnitude.
inline constexpr double kDefaultZeta = 0.02;

enum class FieldKind { ctrl, rad };

/// The vector field rows (clock row first) on the mode variables plus
/// one trailing input, converted to per-hour rates. ctrl has 5 rows on
/// (t, x1..x4, u); rad has 9 rows on (t, x1..x8, u).
std::vector<Polynomial> vector_field(FieldKind kind, const Parameters& p);

/// The 14-mode experimental-protocol hybrid system: control and
/// radioactive phases alternate, with a radioactive injection three
/// hours before each measurement. Includes domains, time-triggered
/// transitions with append/project resets, input box [0,1], the point
/// initial condition and the measurement map x6 + 4*x8.
HybridSystem build(const Parameters& p = {});

/// The seven reference measurements (time in hours, value in the
/// dataset's counting units) with the measurement polynomial attached.
std::vector<DataPoint> data();

}  // namespace momrev::heme
