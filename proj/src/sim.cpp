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

#include "momrev/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace momrev {

namespace {

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Dormand-Prince 5(4) tableau.
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                 a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                 b5 = -2187.0 / 6784, b6 = 11.0 / 84;
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
// embedded 4th-order error weights
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
// dense-output weights
constexpr double d1 = -12715105075.0 / 11282082432.0;
constexpr double d3 = 87487479700.0 / 32700410799.0;
constexpr double d4 = -10690763975.0 / 1880347072.0;
constexpr double d5 = 701980252875.0 / 199316789632.0;
constexpr double d6 = -1453857185.0 / 822651844.0;
constexpr double d7 = 69997945.0 / 29380423.0;

struct ModeRuntime {
  const Mode* mode = nullptr;
  // guard monitors: transitions out of this mode pinning one coordinate
  struct Monitor {
    int transition = -1;
    int coord = 0;
    double value = 0;
  };
  std::vector<Monitor> monitors;
};

}  // namespace

Eigen::VectorXd PolynomialControl::clamp(const Eigen::VectorXd& u) const {
  Eigen::VectorXd out = u;
  for (int i = 0; i < out.size() && i < saturation.dim(); ++i)
    out(i) = std::min(saturation.hi(i), std::max(saturation.lo(i), out(i)));
  return out;
}

Eigen::VectorXd PolynomialControl::eval(int mode, double t,
                                        const Eigen::VectorXd& x) const {
  const int m = saturation.dim();
  Eigen::VectorXd u = Eigen::VectorXd::Zero(m);
  const Window* win = nullptr;
  for (const auto& w : windows) {
    const bool last = &w == &windows.back();
    if (t >= w.t0 && (t < w.t1 || (last && t <= w.t1))) {
      win = &w;
      break;
    }
  }
  if (win) {
    auto it = win->by_mode.find(mode);
    if (it != win->by_mode.end()) {
      for (int k = 0; k < m && k < static_cast<int>(it->second.size()); ++k) {
        const Polynomial& p = it->second[k];
        if (p.nvars() == x.size()) {
          u(k) = p.eval(x);
        } else {
          throw std::invalid_argument(
              "PolynomialControl: polynomial nvars " +
              std::to_string(p.nvars()) + " does not match state dim " +
              std::to_string(x.size()));
        }
      }
    }
  }
  return clamp(u);
}

ControlFn PolynomialControl::as_fn() const {
  return [this](int mode, double t, const Eigen::VectorXd& x) {
    return eval(mode, t, x);
  };
}

Eigen::VectorXd TrajectoryStep::interpolate(double t) const {
  const double h = t1 - t0;
  const double s = h > 0 ? (t - t0) / h : 0.0;
  // contd5 stencil: c1 + s*(c2 + (1-s)*(c3 + s*(c4 + (1-s)*c5)))
  return c1 + s * (c2 + (1.0 - s) * (c3 + s * (c4 + (1.0 - s) * c5)));
}

int HybridTrajectory::mode_at(double t) const {
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const auto& seg = segments[i];
    if (seg.steps.empty()) continue;
    const double lo = seg.steps.front().t0, hi = seg.steps.back().t1;
    const bool last = i + 1 == segments.size();
    if (t >= lo && (t < hi || (last && t <= hi))) return seg.mode_id;
  }
  throw std::out_of_range("HybridTrajectory::mode_at: t = " +
                          std::to_string(t) + " outside the trajectory span");
}

Eigen::VectorXd HybridTrajectory::state_at(double t) const {
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const auto& seg = segments[i];
    if (seg.steps.empty()) continue;
    const double lo = seg.steps.front().t0, hi = seg.steps.back().t1;
    const bool last = i + 1 == segments.size();
    if (!(t >= lo && (t < hi || (last && t <= hi)))) continue;
    // binary search over steps
    std::size_t a = 0, b = seg.steps.size() - 1;
    while (a < b) {
      const std::size_t mid = (a + b) / 2;
      if (t < seg.steps[mid].t1)
        b = mid;
      else
        a = mid + 1;
    }
    return seg.steps[a].interpolate(t);
  }
  throw std::out_of_range("HybridTrajectory::state_at: t = " +
                          std::to_string(t) + " outside the trajectory span");
}

Eigen::VectorXd HybridTrajectory::final_state() const {
  for (auto it = segments.rbegin(); it != segments.rend(); ++it)
    if (!it->steps.empty()) return it->steps.back().interpolate(it->steps.back().t1);
  throw std::out_of_range("HybridTrajectory::final_state: empty trajectory");
}

int HybridTrajectory::final_mode() const {
  if (segments.empty())
    throw std::out_of_range("HybridTrajectory::final_mode: empty trajectory");
  return segments.back().mode_id;
}

void HybridTrajectory::append(const HybridTrajectory& tail) {
  for (const auto& ev : tail.events) events.push_back(ev);
  for (const auto& seg : tail.segments) {
    if (!segments.empty() && segments.back().mode_id == seg.mode_id) {
      auto& dst = segments.back().steps;
      dst.insert(dst.end(), seg.steps.begin(), seg.steps.end());
    } else {
      segments.push_back(seg);
    }
  }
  end_time = tail.end_time;
}

namespace {

class Integrator {
 public:
  Integrator(const HybridSystem& chs, const ControlFn& control,
             const Box& saturation, const SimOptions& opt)
      : chs_(chs), control_(control), sat_(saturation), opt_(opt) {}

  HybridTrajectory run(int start_mode, Eigen::VectorXd x, double t0,
                       double t1) {
    HybridTrajectory traj;
    traj.start_time = t0;
    traj.end_time = t0;
    int mode = start_mode;
    double t = t0;
    std::size_t steps_taken = 0;

    while (t < t1 - 1e-15 * std::max(1.0, std::abs(t1))) {
      const Mode& md = chs_.mode(mode);
      if (x.size() != md.dim)
        throw SimulationError("simulate: state dim " +
                                  std::to_string(x.size()) +
                                  " does not match mode " +
                                  std::to_string(mode) + " dim " +
                                  std::to_string(md.dim),
                              t, x);
      if (traj.segments.empty() || traj.segments.back().mode_id != mode)
        traj.segments.push_back({mode, {}});

      // next hard stop: span end or the earliest clock guard ahead
      double stop = t1;
      int clock_tr = -1;
      std::vector<std::pair<int, std::pair<int, double>>> state_monitors;
      for (std::size_t k = 0; k < chs_.transitions.size(); ++k) {
        const auto& tr = chs_.transitions[k];
        if (tr.from != mode) continue;
        int pinned = -1;
        double value = 0;
        int pins = 0;
        for (int i = 0; i < tr.guard.dim(); ++i) {
          if (tr.guard.bounds[i].first == tr.guard.bounds[i].second) {
            pinned = i;
            value = tr.guard.bounds[i].first;
            ++pins;
          }
        }
        if (pins != 1)
          throw SimulationError(
              "simulate: transition " + std::to_string(k) +
                  " guard pins " + std::to_string(pins) +
                  " coordinates; only single-coordinate guards are executable",
              t, x);
        if (pinned == 0) {
          if (value > t && value < stop) {
            stop = value;
            clock_tr = static_cast<int>(k);
          } else if (value == stop && value > t && clock_tr < 0) {
            clock_tr = static_cast<int>(k);
          }
        } else {
          state_monitors.push_back({static_cast<int>(k), {pinned, value}});
        }
      }
      if (clock_tr >= 0 && stop >= t1) {
        // a clock guard exactly at the span end is not taken
        if (stop > t1) clock_tr = -1;
        stop = std::min(stop, t1);
        if (stop == t1 && clock_tr >= 0) {
          const double cv = *chs_.transitions[clock_tr].clock_value();
          if (cv >= t1) clock_tr = -1;
        }
      }

      // integrate this mode until the stop time or a state guard fires
      auto rhs = [&](double tt, const Eigen::VectorXd& y) {
        Eigen::VectorXd u = sat_clamp(control_(mode, tt, y));
        Eigen::VectorXd point(md.dim + u.size());
        point.head(md.dim) = y;
        point.tail(u.size()) = u;
        Eigen::VectorXd dy(md.dim);
        for (int i = 0; i < md.dim; ++i) dy(i) = md.dynamics[i].eval(point);
        return dy;
      };

      double h = std::min(opt_.h_init, stop - t);
      Eigen::VectorXd k1 = rhs(t, x);
      bool fired_state_guard = false;
      int fired_tr = -1;

      while (t < stop - 1e-15 * std::max(1.0, std::abs(stop))) {
        if (++steps_taken > opt_.max_steps)
          throw SimulationError("simulate: step budget exhausted", t, x);
        h = std::min(h, stop - t);
        if (h < opt_.h_min)
          throw SimulationError("simulate: step size underflow", t, x);

        // one DP45 attempt
        Eigen::VectorXd k2 = rhs(t + c2 * h, x + h * (a21 * k1));
        Eigen::VectorXd k3 = rhs(t + c3 * h, x + h * (a31 * k1 + a32 * k2));
        Eigen::VectorXd k4 =
            rhs(t + c4 * h, x + h * (a41 * k1 + a42 * k2 + a43 * k3));
        Eigen::VectorXd k5 = rhs(
            t + c5 * h, x + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
        Eigen::VectorXd k6 =
            rhs(t + h,
                x + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
        Eigen::VectorXd y1 =
            x + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
        Eigen::VectorXd k7 = rhs(t + h, y1);

        Eigen::VectorXd errv =
            h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
        double err = 0;
        for (int i = 0; i < md.dim; ++i) {
          const double sc =
              opt_.abstol +
              opt_.reltol * std::max(std::abs(x(i)), std::abs(y1(i)));
          err += (errv(i) / sc) * (errv(i) / sc);
        }
        err = std::sqrt(err / md.dim);

        if (err > 1.0) {
          h *= std::max(0.2, 0.9 * std::pow(err, -0.2));
          continue;
        }

        // accepted: build the dense-output stencil
        TrajectoryStep step;
        step.t0 = t;
        step.t1 = t + h;
        const Eigen::VectorXd ydiff = y1 - x;
        const Eigen::VectorXd bspl = h * k1 - ydiff;
        step.c1 = x;
        step.c2 = ydiff;
        step.c3 = bspl;
        step.c4 = ydiff - h * k7 - bspl;
        step.c5 = h * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 +
                       d7 * k7);
        step.u0 = sat_clamp(control_(mode, t, x));

        // state-guard crossing inside the step?
        double t_cross = std::numeric_limits<double>::infinity();
        int cross_tr = -1;
        for (const auto& [kidx, cv] : state_monitors) {
          const auto& [coord, value] = cv;
          const double s0 = x(coord) - value;
          const double s1 = y1(coord) - value;
          if (s0 == 0.0 && t == t0) continue;  // starting on the guard
          if (s0 * s1 > 0.0) continue;
          // bisect on the dense output
          double lo = t, hi = t + h;
          for (int it = 0; it < 200 && hi - lo > opt_.tau_event; ++it) {
            const double mid = 0.5 * (lo + hi);
            const double sm = step.interpolate(mid)(coord) - value;
            if ((sm <= 0) == (s0 <= 0))
              lo = mid;
            else
              hi = mid;
          }
          const double tc = 0.5 * (lo + hi);
          if (tc < t_cross) {
            // the full guard box must hold at the crossing
            const auto& tr = chs_.transitions[kidx];
            if (tr.guard.contains(step.interpolate(tc), opt_.tau_domain)) {
              t_cross = tc;
              cross_tr = kidx;
            }
          }
        }

        if (cross_tr >= 0) {
          // truncate the step at the crossing; the quartic interpolant
          // restricted to a sub-interval is refit through 5 samples
          step = refit_step(step, t, t + h, t, t_cross);
          step.u0 = sat_clamp(control_(mode, t, x));
          traj.segments.back().steps.push_back(step);
          x = step.interpolate(t_cross);
          t = t_cross;
          fired_state_guard = true;
          fired_tr = cross_tr;
          break;
        }

        traj.segments.back().steps.push_back(step);
        x = y1;
        t = step.t1;
        k1 = k7;  // FSAL
        h *= std::min(5.0, std::max(0.2, 0.9 * std::pow(std::max(err, 1e-10), -0.2)));

        // domain containment (with tolerance); localize the exit time
        if (!md.domain.contains(x, opt_.tau_domain)) {
          double lo = step.t0, hi = step.t1;
          for (int it = 0; it < 200 && hi - lo > opt_.tau_event; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (md.domain.contains(step.interpolate(mid), opt_.tau_domain))
              lo = mid;
            else
              hi = mid;
          }
          throw SimulationError(
              "simulate: left the domain of mode " + std::to_string(mode) +
                  " with no enabled transition at t = " + fmt17(hi),
              hi, step.interpolate(hi));
        }
      }

      traj.end_time = t;

      int taken = -1;
      if (fired_state_guard) {
        taken = fired_tr;
      } else if (clock_tr >= 0 && t >= stop - 1e-12 && stop < t1) {
        taken = clock_tr;
      }

      if (taken >= 0) {
        const auto& tr = chs_.transitions[taken];
        EventRecord ev;
        ev.time = t;
        ev.transition = taken;
        ev.from_mode = tr.from;
        ev.to_mode = tr.to;
        ev.state_before = x;
        x = tr.reset(x);
        ev.state_after = x;
        traj.events.push_back(ev);
        mode = tr.to;
        // snap the clock coordinate exactly onto the guard time
        if (tr.clock_value() && x.size() > 0) x(0) = *tr.clock_value();
      } else if (t < t1 - 1e-12) {
        throw SimulationError(
            "simulate: stalled before the span end in mode " +
                std::to_string(mode),
            t, x);
      }
    }

    traj.end_time = t1;
    return traj;
  }

 private:
  Eigen::VectorXd sat_clamp(const Eigen::VectorXd& u) const {
    Eigen::VectorXd out = u;
    for (int i = 0; i < out.size() && i < sat_.dim(); ++i)
      out(i) = std::min(sat_.hi(i), std::max(sat_.lo(i), out(i)));
    return out;
  }

  // Refit the quartic dense output onto a sub-interval [s0, s1] of
  // [t0, t1] so that interpolate() keeps its contract after an event
  // truncates the step.
  static TrajectoryStep refit_step(const TrajectoryStep& in, double t0,
                                   double t1, double s0, double s1) {
    TrajectoryStep out;
    out.t0 = s0;
    out.t1 = s1;
    out.u0 = in.u0;
    // sample the quartic at 5 Chebyshev-ish nodes and solve for the new
    // stencil coefficients expressed in the contd5 basis
    const int n = static_cast<int>(in.c1.size());
    Eigen::MatrixXd basis(5, 5);
    Eigen::MatrixXd samples(5, n);
    for (int i = 0; i < 5; ++i) {
      const double s = i / 4.0;                      // parameter on [s0, s1]
      const double tt = s0 + s * (s1 - s0);
      TrajectoryStep probe = in;
      probe.t0 = t0;
      probe.t1 = t1;
      samples.row(i) = probe.interpolate(tt).transpose();
      // contd5 basis functions at parameter s
      basis(i, 0) = 1.0;
      basis(i, 1) = s;
      basis(i, 2) = s * (1 - s);
      basis(i, 3) = s * s * (1 - s);
      basis(i, 4) = s * s * (1 - s) * (1 - s);
    }
    Eigen::MatrixXd coef = basis.fullPivLu().solve(samples);
    out.c1 = coef.row(0).transpose();
    out.c2 = coef.row(1).transpose();
    out.c3 = coef.row(2).transpose();
    out.c4 = coef.row(3).transpose();
    out.c5 = coef.row(4).transpose();
    return out;
  }

  const HybridSystem& chs_;
  const ControlFn& control_;
  const Box& sat_;
  const SimOptions& opt_;
};

}  // namespace

HybridTrajectory simulate(const HybridSystem& chs, const ControlFn& control,
                          const Box& saturation, int start_mode,
                          const Eigen::VectorXd& start_state, double t0,
                          double t1, const SimOptions& opt) {
  if (!(t0 < t1)) throw std::invalid_argument("simulate: need t0 < t1");
  const Mode& m0 = chs.mode(start_mode);
  if (!m0.domain.contains(start_state, opt.tau_domain))
    throw SimulationError("simulate: start state outside the start domain",
                          t0, start_state);
  Integrator integ(chs, control, saturation, opt);
  return integ.run(start_mode, start_state, t0, t1);
}

HybridTrajectory simulate(const HybridSystem& chs,
                          const PolynomialControl& control, int start_mode,
                          const Eigen::VectorXd& start_state, double t0,
                          double t1, const SimOptions& opt) {
  return simulate(chs, control.as_fn(), control.saturation, start_mode,
                  start_state, t0, t1, opt);
}

double evaluate_measurement(const HybridSystem& chs,
                            const HybridTrajectory& traj, const Polynomial& m,
                            double t) {
  const int mode = traj.mode_at(t);
  const Mode& md = chs.mode(mode);
  if (m.nvars() > md.dim)
    throw std::invalid_argument(
        "evaluate_measurement: measurement needs " + std::to_string(m.nvars()) +
        " variables but mode " + std::to_string(mode) + " has " +
        std::to_string(md.dim));
  const Eigen::VectorXd x = traj.state_at(t);
  return m.extended(md.dim).eval(x);
}

double trajectory_integral(const HybridSystem& chs,
                           const HybridTrajectory& traj,
                           const std::map<int, Polynomial>& h_by_mode,
                           const ControlFn& control, const Box& saturation) {
  // 5-point Gauss-Legendre nodes on [0, 1]
  static const double gx[5] = {0.04691007703066800, 0.23076534494715845, 0.5,
                               0.76923465505284155, 0.95308992296933200};
  static const double gw[5] = {0.11846344252809454, 0.23931433524968324,
                               0.28444444444444444, 0.23931433524968324,
                               0.11846344252809454};
  double total = 0;
  for (const auto& seg : traj.segments) {
    auto it = h_by_mode.find(seg.mode_id);
    if (it == h_by_mode.end() || it->second.is_zero()) continue;
    const Mode& md = chs.mode(seg.mode_id);
    const Polynomial& h = it->second;
    const int nu = saturation.dim();
    for (const auto& step : seg.steps) {
      const double len = step.t1 - step.t0;
      if (len <= 0) continue;
      double acc = 0;
      for (int q = 0; q < 5; ++q) {
        const double t = step.t0 + gx[q] * len;
        const Eigen::VectorXd x = step.interpolate(t);
        Eigen::VectorXd u = control(seg.mode_id, t, x);
        for (int i = 0; i < u.size() && i < nu; ++i)
          u(i) = std::min(saturation.hi(i), std::max(saturation.lo(i), u(i)));
        Eigen::VectorXd point(md.dim + nu);
        point.head(md.dim) = x;
        point.tail(nu) = u;
        acc += gw[q] * h.eval(point);
      }
      total += acc * len;
    }
  }
  return total;
}

std::string trajectory_csv(const HybridSystem& chs,
                           const HybridTrajectory& traj) {
  int max_dim = 0;
  for (const auto& m : chs.modes) max_dim = std::max(max_dim, m.dim);
  const int nu = chs.num_inputs();
  std::ostringstream os;
  os << "t,mode";
  for (int i = 0; i < max_dim; ++i) os << ",x" << i;
  for (int i = 0; i < nu; ++i) os << ",u" << i;
  os << "\n";
  auto row = [&](double t, int mode, const Eigen::VectorXd& x,
                 const Eigen::VectorXd& u) {
    os << fmt17(t) << "," << mode;
    for (int i = 0; i < max_dim; ++i)
      os << "," << (i < x.size() ? fmt17(x(i)) : "");
    for (int i = 0; i < nu; ++i) os << "," << (i < u.size() ? fmt17(u(i)) : "");
    os << "\n";
  };
  for (const auto& seg : traj.segments) {
    for (const auto& step : seg.steps)
      row(step.t0, seg.mode_id, step.c1, step.u0);
    if (!seg.steps.empty()) {
      const auto& last = seg.steps.back();
      row(last.t1, seg.mode_id, last.interpolate(last.t1), last.u0);
    }
  }
  return os.str();
}

std::string events_csv(const HybridTrajectory& traj) {
  std::ostringstream os;
  os << "t,transition,from,to,state_before,state_after\n";
  for (const auto& ev : traj.events) {
    os << fmt17(ev.time) << "," << ev.transition << "," << ev.from_mode << ","
       << ev.to_mode << ",\"";
    for (int i = 0; i < ev.state_before.size(); ++i)
      os << (i ? ";" : "") << fmt17(ev.state_before(i));
    os << "\",\"";
    for (int i = 0; i < ev.state_after.size(); ++i)
      os << (i ? ";" : "") << fmt17(ev.state_after(i));
    os << "\"\n";
  }
  return os.str();
}

}  // namespace momrev
