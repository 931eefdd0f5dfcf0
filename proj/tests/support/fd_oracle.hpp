#pragma once

// Finite-difference check of the tangent cocycle. The oracle differentiates
// the full (q, v) flow between mid-flight instants by central differences,
// never touching the reduced Jacobian formulas.

#include "fallball/lyapunov.hpp"
#include "fallball/jacobian.hpp"
#include "fallball/simulation.hpp"

#include <cmath>

namespace fallball::oracle {

/// State at absolute time t, starting from s (flight between collisions included).
inline BallState flow_to(const MassConfig& cfg, const BallState& s, double t) {
  const auto logs = simulate(cfg, s, Horizon::time(t));
  const BallState& last = logs.front().final_state;
  return advance(last, t - last.t);
}

/// Central-difference derivative of the flow from time s.t to time t in (q, v).
inline Matrix flow_derivative(const MassConfig& cfg, const BallState& s, double t, double h) {
  const Eigen::Index n = s.q.size();
  Matrix d(2 * n, 2 * n);
  for (Eigen::Index c = 0; c < 2 * n; ++c) {
    BallState plus = s, minus = s;
    (c < n ? plus.q[c] : plus.v[c - n]) += h;
    (c < n ? minus.q[c] : minus.v[c - n]) -= h;
    const BallState a = flow_to(cfg, plus, t);
    const BallState b = flow_to(cfg, minus, t);
    d.col(c).head(n) = (a.q - b.q) / (2 * h);
    d.col(c).tail(n) = (a.v - b.v) / (2 * h);
  }
  return d;
}

struct FdComparison {
  double flow_rate = 0.0;     ///< largest exponent of the FD flow derivative, per unit time
  double cocycle_rate = 0.0;  ///< largest exponent of the reduced cocycle, per unit time
  std::int64_t events = 0;
  double elapsed = 0.0;
};

/// Chains FD flow derivatives between midpoints of roomy flight gaps, about
/// `stride` collisions apart, and compares the top exponent with the cocycle
/// of the same collisions. Both are taken along one chained trajectory.
inline FdComparison compare_top_exponent(const MassConfig& cfg, const BallState& s0, std::int64_t events,
                                         int stride = 4, double h = 1e-7, double min_gap = 1e-3) {
  const int full = 2 * cfg.size();
  BenettinAccumulator flow(full, 1), coc(full - 2, 1);
  const EventLog head = simulate(cfg, s0, Horizon::events(1)).front();
  BallState s = advance(s0, 0.5 * (head.events.front().t - s0.t));
  const double t_begin = s.t;
  std::int64_t used = 0;
  while (used < events) {
    const EventLog seg = simulate(cfg, s, Horizon::events(stride + 32)).front();
    std::size_t k = static_cast<std::size_t>(stride - 1);
    std::size_t best = k;
    for (std::size_t j = k; j + 1 < seg.events.size(); ++j) {
      const double gap = seg.events[j + 1].t - seg.events[j].t;
      if (gap > seg.events[best + 1].t - seg.events[best].t) best = j;
      if (gap > min_gap) {
        best = j;
        break;
      }
    }
    const CollisionEvent& ev = seg.events[best];
    const double cut = 0.5 * (ev.t + seg.events[best + 1].t);
    flow.push(flow_derivative(cfg, s, cut, h));
    for (std::size_t j = 0; j <= best; ++j) coc.push(collision_jacobian(cfg, seg.events[j]).matrix);
    used += static_cast<std::int64_t>(best + 1);
    s = advance(BallState{ev.t, ev.q_at, ev.v_post}, cut - ev.t);
  }
  FdComparison out;
  out.elapsed = s.t - t_begin;
  out.events = used;
  out.flow_rate = flow.exponents()[0] * static_cast<double>(flow.steps()) / out.elapsed;
  out.cocycle_rate = coc.exponents()[0] * static_cast<double>(coc.steps()) / out.elapsed;
  return out;
}

}  // namespace fallball::oracle
