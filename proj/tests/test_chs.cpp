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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "momrev/chs.hpp"
#include "momrev/heme.hpp"

using namespace momrev;

TEST_CASE("the case-study system validates cleanly") {
  const HybridSystem chs = heme::build();
  const auto diags = validate(chs);
  for (const auto& d : diags) MESSAGE(d.code, ": ", d.message);
  CHECK(diags.empty());
}

TEST_CASE("overlapping guards out of one mode are reported once") {
  HybridSystem chs = heme::build();
  // duplicate the first transition with an identical guard
  Transition dup = chs.transitions[0];
  dup.to = 3;
  dup.reset.A = Eigen::MatrixXd::Zero(5, 5);
  dup.reset.A.setIdentity();
  dup.reset.b = Eigen::VectorXd::Zero(5);
  chs.transitions.push_back(dup);
  int overlaps = 0;
  for (const auto& d : validate(chs))
    if (d.code == "guards-not-disjoint") ++overlaps;
  CHECK(overlaps == 1);
}

TEST_CASE("a guard in the domain interior is flagged") {
  HybridSystem chs = heme::build();
  chs.transitions[0].guard.bounds[0] = {2.0, 2.0};  // mid-window, not t = 4
  int hits = 0;
  for (const auto& d : validate(chs))
    if (d.code == "guard-not-boundary") ++hits;
  CHECK(hits == 1);
  CHECK(validate(chs).size() == 1);
}

TEST_CASE("mode_at follows the protocol schedule") {
  const HybridSystem chs = heme::build();
  CHECK(mode_at(chs, 2.0) == 1);
  CHECK(mode_at(chs, 5.0) == 2);
  CHECK(mode_at(chs, 53.0) == 14);
  // left-closed windows; closed final window
  CHECK(mode_at(chs, 0.0) == 1);
  CHECK(mode_at(chs, 4.0) == 2);
  CHECK(mode_at(chs, 7.0) == 3);
  CHECK(mode_at(chs, 55.0) == 14);
}

TEST_CASE("mode_at rejects what it cannot answer") {
  HybridSystem chs = heme::build();
  CHECK_THROWS_AS(mode_at(chs, 60.0), std::invalid_argument);
  CHECK_THROWS_AS(mode_at(chs, -1.0), std::invalid_argument);
  // pin a state coordinate instead of the clock
  chs.transitions[0].guard.bounds[0] = {0.0, 4.0};
  chs.transitions[0].guard.bounds[1] = {100.0, 100.0};
  CHECK_THROWS_AS(mode_at(chs, 2.0), std::invalid_argument);
}

TEST_CASE("restriction keeps exactly the visited modes") {
  const HybridSystem chs = heme::build();

  const HybridSystem w1 = restrict_system(chs, 0.0, 7.0);
  CHECK(w1.modes.size() == 2);
  CHECK(w1.source_mode_ids == std::vector<int>{1, 2});
  CHECK(w1.transitions.size() == 1);
  CHECK(w1.initial_mode == 1);
  CHECK(validate(w1).empty());

  const HybridSystem w2 = restrict_system(chs, 7.0, 11.0);
  CHECK(w2.source_mode_ids == std::vector<int>{3, 4});
  CHECK(w2.initial_mode == 3);

  const HybridSystem all = restrict_system(chs, 0.0, 55.0);
  CHECK(all.modes.size() == 14);
  CHECK(all.transitions.size() == 13);
}

TEST_CASE("restriction preserves the schedule") {
  const HybridSystem chs = heme::build();
  std::mt19937 rng(2024);
  std::uniform_real_distribution<double> d(0.0, 55.0);
  for (int trial = 0; trial < 40; ++trial) {
    double a = d(rng), b = d(rng);
    if (a > b) std::swap(a, b);
    if (b - a < 0.5) continue;
    const HybridSystem sub = restrict_system(chs, a, b);
    std::uniform_real_distribution<double> inside(a, b);
    for (int k = 0; k < 10; ++k) {
      const double t = inside(rng);
      CHECK(mode_at(sub, t) == mode_at(chs, t));
    }
  }
}

TEST_CASE("append/project resets compose to the identity") {
  const HybridSystem chs = heme::build();
  const AffineMap& enter = chs.transitions[0].reset;  // 1 -> 2
  const AffineMap& leave = chs.transitions[1].reset;  // 2 -> 3
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> d(-3.0, 3.0);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::VectorXd x(5);
    for (int i = 0; i < 5; ++i) x(i) = d(rng);
    const Eigen::VectorXd lifted = enter(x);
    REQUIRE(lifted.size() == 9);
    CHECK(lifted.tail(4).isZero(0.0));
    const Eigen::VectorXd back = leave(lifted);
    CHECK(back.isApprox(x, 0.0));  // exact
  }
}

TEST_CASE("restriction rejects bad spans") {
  const HybridSystem chs = heme::build();
  CHECK_THROWS(restrict_system(chs, 7.0, 7.0));
  CHECK_THROWS(restrict_system(chs, -5.0, 60.0));
}
