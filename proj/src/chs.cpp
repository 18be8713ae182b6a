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

#include "momrev/chs.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace momrev {

bool Box::contains(const Eigen::VectorXd& x, double tol) const {
  if (x.size() != dim()) return false;
  for (int i = 0; i < dim(); ++i) {
    if (x(i) < bounds[i].first - tol || x(i) > bounds[i].second + tol)
      return false;
  }
  return true;
}

bool Box::intersects(const Box& other) const {
  if (other.dim() != dim()) return false;
  for (int i = 0; i < dim(); ++i) {
    if (bounds[i].second < other.bounds[i].first ||
        other.bounds[i].second < bounds[i].first)
      return false;
  }
  return true;
}

Box Box::cube(int dim, double lo, double hi) {
  Box b;
  b.bounds.assign(static_cast<std::size_t>(dim), {lo, hi});
  return b;
}

AffineMap AffineMap::identity(int dim) {
  return {Eigen::MatrixXd::Identity(dim, dim), Eigen::VectorXd::Zero(dim)};
}

bool Mode::has_tag(const std::string& tag) const {
  return std::find(tags.begin(), tags.end(), tag) != tags.end();
}

std::optional<double> Transition::clock_value() const {
  if (guard.dim() == 0) return std::nullopt;
  if (guard.bounds[0].first != guard.bounds[0].second) return std::nullopt;
  // all other coordinates must be full intervals for a pure time trigger;
  // the caller checks them against the source domain.
  return guard.bounds[0].first;
}

const Mode& HybridSystem::mode(int id) const {
  for (const auto& m : modes)
    if (m.id == id) return m;
  throw std::out_of_range("HybridSystem: no mode with id " + std::to_string(id));
}

int HybridSystem::mode_pos(int id) const {
  for (std::size_t i = 0; i < modes.size(); ++i)
    if (modes[i].id == id) return static_cast<int>(i);
  return -1;
}

std::vector<const Transition*> HybridSystem::transitions_from(int id) const {
  std::vector<const Transition*> out;
  for (const auto& tr : transitions)
    if (tr.from == id) out.push_back(&tr);
  return out;
}

std::vector<const Transition*> HybridSystem::transitions_into(int id) const {
  std::vector<const Transition*> out;
  for (const auto& tr : transitions)
    if (tr.to == id) out.push_back(&tr);
  return out;
}

double HybridSystem::horizon_start() const {
  double t = std::numeric_limits<double>::infinity();
  for (const auto& m : modes) t = std::min(t, m.time_window().first);
  return t;
}

double HybridSystem::horizon_end() const {
  double t = -std::numeric_limits<double>::infinity();
  for (const auto& m : modes) t = std::max(t, m.time_window().second);
  return t;
}

bool HybridSystem::time_triggered() const {
  for (const auto& tr : transitions) {
    if (!tr.clock_value()) return false;
    // remaining guard coordinates must cover the source domain slice
    const Mode& src = mode(tr.from);
    for (int i = 1; i < tr.guard.dim(); ++i) {
      if (tr.guard.bounds[i].first > src.domain.bounds[i].first ||
          tr.guard.bounds[i].second < src.domain.bounds[i].second)
        return false;
    }
  }
  return true;
}

std::vector<Diagnostic> validate(const HybridSystem& chs) {
  std::vector<Diagnostic> out;
  auto add = [&](std::string code, std::string msg, int mode = -1,
                 int transition = -1) {
    out.push_back({std::move(code), std::move(msg), mode, transition});
  };

  const int m = chs.num_inputs();
  for (const auto& mode : chs.modes) {
    if (mode.domain.dim() != mode.dim)
      add("domain-dim", "mode " + std::to_string(mode.id) + ": domain has " +
                            std::to_string(mode.domain.dim()) +
                            " intervals, expected " + std::to_string(mode.dim),
          mode.id);
    for (const auto& [lo, hi] : mode.domain.bounds) {
      if (!(lo <= hi) || !std::isfinite(lo) || !std::isfinite(hi)) {
        add("domain-bounds",
            "mode " + std::to_string(mode.id) + ": domain not a compact box",
            mode.id);
        break;
      }
    }
    if (static_cast<int>(mode.dynamics.size()) != mode.dim)
      add("dynamics-rows", "mode " + std::to_string(mode.id) + ": " +
                               std::to_string(mode.dynamics.size()) +
                               " dynamics rows, expected " +
                               std::to_string(mode.dim),
          mode.id);
    for (std::size_t k = 0; k < mode.dynamics.size(); ++k) {
      const auto& f = mode.dynamics[k];
      if (f.nvars() != mode.dim + m) {
        add("dynamics-vars", "mode " + std::to_string(mode.id) + " row " +
                                 std::to_string(k) + ": nvars " +
                                 std::to_string(f.nvars()) + ", expected " +
                                 std::to_string(mode.dim + m),
            mode.id);
        continue;
      }
      if (!f.affine_in(mode.dim, m))
        add("dynamics-affine", "mode " + std::to_string(mode.id) + " row " +
                                   std::to_string(k) +
                                   ": not affine in the input",
            mode.id);
    }
  }

  for (const auto& [lo, hi] : chs.input_box.bounds) {
    if (!(lo <= hi) || !std::isfinite(lo) || !std::isfinite(hi)) {
      add("input-box", "input box not compact");
      break;
    }
  }

  // transitions: guard inside source domain and on its boundary, reset
  // dimensions match
  for (std::size_t k = 0; k < chs.transitions.size(); ++k) {
    const auto& tr = chs.transitions[k];
    const int ti = static_cast<int>(k);
    if (chs.mode_pos(tr.from) < 0 || chs.mode_pos(tr.to) < 0) {
      add("transition-modes",
          "transition " + std::to_string(k) + ": unknown mode id", -1, ti);
      continue;
    }
    const Mode& src = chs.mode(tr.from);
    const Mode& dst = chs.mode(tr.to);
    if (tr.guard.dim() != src.dim) {
      add("guard-dim", "transition " + std::to_string(k) + ": guard dim " +
                           std::to_string(tr.guard.dim()) + ", expected " +
                           std::to_string(src.dim),
          tr.from, ti);
      continue;
    }
    bool inside = true, on_boundary = false;
    for (int i = 0; i < src.dim; ++i) {
      const auto [glo, ghi] = tr.guard.bounds[i];
      const auto [dlo, dhi] = src.domain.bounds[i];
      if (glo < dlo || ghi > dhi) inside = false;
      if (glo == ghi && (glo == dlo || glo == dhi)) on_boundary = true;
    }
    if (!inside)
      add("guard-outside",
          "transition " + std::to_string(k) + ": guard leaves the domain",
          tr.from, ti);
    else if (!on_boundary)
      add("guard-not-boundary",
          "transition " + std::to_string(k) +
              ": guard not on the domain boundary",
          tr.from, ti);
    if (tr.reset.A.rows() != dst.dim || tr.reset.A.cols() != src.dim ||
        tr.reset.b.size() != dst.dim)
      add("reset-dim", "transition " + std::to_string(k) + ": reset is " +
                           std::to_string(tr.reset.A.rows()) + "x" +
                           std::to_string(tr.reset.A.cols()) + ", expected " +
                           std::to_string(dst.dim) + "x" +
                           std::to_string(src.dim),
          tr.from, ti);
  }

  // pairwise disjoint guards out of each mode
  for (std::size_t a = 0; a < chs.transitions.size(); ++a) {
    for (std::size_t b = a + 1; b < chs.transitions.size(); ++b) {
      const auto& ta = chs.transitions[a];
      const auto& tb = chs.transitions[b];
      if (ta.from != tb.from) continue;
      if (ta.guard.dim() == tb.guard.dim() && ta.guard.intersects(tb.guard))
        add("guards-not-disjoint",
            "mode " + std::to_string(ta.from) + ": guards of transitions " +
                std::to_string(a) + " and " + std::to_string(b) + " intersect",
            ta.from, static_cast<int>(a));
    }
  }

  if (chs.mode_pos(chs.initial_mode) < 0) {
    add("initial-mode", "initial mode id " + std::to_string(chs.initial_mode) +
                            " not present");
  } else {
    const Mode& m0 = chs.mode(chs.initial_mode);
    if (chs.initial_state.size() != m0.dim)
      add("initial-dim", "initial state has dim " +
                             std::to_string(chs.initial_state.size()) +
                             ", expected " + std::to_string(m0.dim),
          chs.initial_mode);
    else if (!m0.domain.contains(chs.initial_state, 1e-12))
      add("initial-outside", "initial state outside the initial domain",
          chs.initial_mode);
  }

  return out;
}

namespace {

// schedule of (mode id, [t0, t1)) windows for a time-triggered system
std::vector<std::pair<int, std::pair<double, double>>> schedule_of(
    const HybridSystem& chs) {
  std::vector<std::pair<int, std::pair<double, double>>> sched;
  for (const auto& m : chs.modes) sched.push_back({m.id, m.time_window()});
  std::sort(sched.begin(), sched.end(),
            [](const auto& a, const auto& b) { return a.second < b.second; });
  return sched;
}

}  // namespace

int mode_at(const HybridSystem& chs, double t) {
  if (!chs.time_triggered())
    throw std::invalid_argument(
        "mode_at: state-dependent guards present; the mode schedule is not "
        "precomputable from time alone");
  const double t0 = chs.horizon_start(), t1 = chs.horizon_end();
  if (t < t0 || t > t1)
    throw std::invalid_argument("mode_at: t = " + std::to_string(t) +
                                " outside the horizon [" + std::to_string(t0) +
                                ", " + std::to_string(t1) + "]");
  const auto sched = schedule_of(chs);
  for (std::size_t i = 0; i < sched.size(); ++i) {
    const auto& [id, win] = sched[i];
    const bool last = i + 1 == sched.size();
    if (t >= win.first && (t < win.second || (last && t <= win.second)))
      return id;
  }
  throw std::invalid_argument("mode_at: no mode window covers t = " +
                              std::to_string(t));
}

HybridSystem restrict_system(const HybridSystem& chs, double t_a, double t_b) {
  if (!(t_a < t_b))
    throw std::invalid_argument("restrict_system: need t_a < t_b");
  if (t_a < chs.horizon_start() - 1e-12 || t_b > chs.horizon_end() + 1e-12)
    throw std::invalid_argument("restrict_system: span outside the horizon");
  if (!chs.time_triggered())
    throw std::invalid_argument(
        "restrict_system: state-dependent guards present");

  HybridSystem out;
  out.name = chs.name + "[" + std::to_string(t_a) + "," + std::to_string(t_b) +
             "]";
  out.input_box = chs.input_box;
  out.measurement = chs.measurement;

  // keep modes whose window has interior overlap with the span
  for (const auto& [id, win] : schedule_of(chs)) {
    const double lo = std::max(win.first, t_a);
    const double hi = std::min(win.second, t_b);
    if (lo >= hi) continue;
    Mode m = chs.mode(id);
    m.domain.bounds[0] = {lo, hi};
    out.modes.push_back(std::move(m));
    out.source_mode_ids.push_back(id);
  }
  if (out.modes.empty())
    throw std::invalid_argument("restrict_system: no mode visits the span");

  for (const auto& tr : chs.transitions) {
    const double c = *tr.clock_value();
    if (c <= t_a || c >= t_b) continue;
    if (out.mode_pos(tr.from) < 0 || out.mode_pos(tr.to) < 0) continue;
    out.transitions.push_back(tr);
  }

  out.initial_mode = mode_at(chs, t_a);
  // chain the original initial condition through when it applies
  if (t_a == chs.horizon_start() &&
      chs.initial_mode == out.initial_mode) {
    out.initial_state = chs.initial_state;
  } else {
    out.initial_state = Eigen::VectorXd::Zero(out.mode(out.initial_mode).dim);
    if (out.initial_state.size() > 0) out.initial_state(0) = t_a;
  }
  return out;
}

}  // namespace momrev
