#include "fallball/dynamics.hpp"

#include <cassert>
#include <limits>

namespace fallball {

std::string to_string(CollisionKind kind) {
  return kind.is_floor() ? std::string("floor") : "pair(" + std::to_string(kind.index) + ")";
}

const char* to_string(Singularity s) noexcept {
  switch (s) {
    case Singularity::None: return "none";
    case Singularity::RegularSimultaneous: return "regular-simultaneous";
    case Singularity::Triple: return "triple";
    case Singularity::LowerTwoAtFloor: return "lower-two-at-floor";
  }
  return "unknown";
}

double kinetic_energy(const MassConfig& cfg, const Vector& v) {
  return 0.5 * cfg.masses.dot(v.cwiseProduct(v));
}

double momentum(const MassConfig& cfg, const Vector& v) { return cfg.masses.dot(v); }

double hamiltonian(const MassConfig& cfg, const BallState& s) {
  return kinetic_energy(cfg, s.v) + cfg.masses.dot(s.q);
}

BallState advance(const BallState& s, double dt) {
  BallState out;
  out.t = s.t + dt;
  out.q = s.q + dt * s.v - Vector::Constant(s.q.size(), 0.5 * dt * dt);
  out.v = s.v - Vector::Constant(s.v.size(), dt);
  return out;
}

BallState advance_guarded(const MassConfig& cfg, const BallState& s, double dt) {
  if (dt > 0.0) {
    const NextCollision next = next_collision(cfg, s);
    if (next.dt < dt - time_tolerance(dt)) {
      throw Error(Errc::CollisionSkipped, to_string(next.kind) + " at dt=" + std::to_string(next.dt) +
                                              " lies inside the requested step " + std::to_string(dt));
    }
  }
  return advance(s, dt);
}

double floor_fall_time(double q, double v) noexcept {
  const double disc = std::sqrt(std::max(0.0, v * v + 2.0 * q));
  if (v >= 0.0) return v + disc;
  const double denom = disc - v;
  return denom > 0.0 ? 2.0 * q / denom : 0.0;
}

NextCollision next_collision(const MassConfig& cfg, const BallState& s) {
  const int n = cfg.size();
  assert(s.size() == n);
  NextCollision out;
  out.candidates.reserve(n);
  out.candidates.push_back({CollisionKind::floor(), std::max(0.0, floor_fall_time(s.q[0], s.v[0]))});
  for (int i = 0; i + 1 < n; ++i) {
    const double closing = s.v[i] - s.v[i + 1];
    if (closing > 0.0) {
      const double gap = s.q[i + 1] - s.q[i];
      out.candidates.push_back({CollisionKind::pair(i + 1), std::max(0.0, gap / closing)});
    }
  }
  std::stable_sort(out.candidates.begin(), out.candidates.end(),
                   [](const CollisionCandidate& a, const CollisionCandidate& b) { return a.dt < b.dt; });
  out.kind = out.candidates.front().kind;
  out.dt = out.candidates.front().dt;
  out.simultaneous = out.candidates.size() > 1 &&
                     out.candidates[1].dt - out.dt <= time_tolerance(s.t + out.dt);
  assert(std::isfinite(out.dt));
  return out;
}

Vector collision_map(const MassConfig& cfg, const Vector& v, CollisionKind kind) {
  Vector out = v;
  if (kind.is_floor()) {
    out[0] = -v[0];
    return out;
  }
  const int i = kind.index - 1;
  const double g = cfg.gammas[i];
  out[i] = g * v[i] + (1.0 - g) * v[i + 1];
  out[i + 1] = (1.0 + g) * v[i] - g * v[i + 1];
  return out;
}

BallState apply_collision(const MassConfig& cfg, const BallState& s, CollisionKind kind, double tol) {
  if (kind.is_floor()) {
    if (std::abs(s.q[0]) > tol || s.v[0] > tol) {
      throw Error(Errc::NotOnSection, "floor collision needs q_1 = 0 and v_1 <= 0");
    }
  } else {
    if (kind.index < 1 || kind.index >= cfg.size()) {
      throw Error(Errc::NotOnSection, "pair index out of range: " + std::to_string(kind.index));
    }
    const int i = kind.index - 1;
    const double scale = std::max(1.0, std::abs(s.q[i]));
    if (std::abs(s.q[i + 1] - s.q[i]) > tol * scale || s.v[i] < s.v[i + 1] - tol) {
      throw Error(Errc::NotOnSection, to_string(kind) + " needs touching, approaching balls");
    }
  }
  BallState out = s;
  out.v = collision_map(cfg, s.v, kind);
  return out;
}

Singularity detect_singularity(const NextCollision& next, double eps_sing) {
  const auto& c = next.candidates;
  if (c.size() < 2) return Singularity::None;
  const double t0 = c.front().dt;
  bool tie = false;
  for (std::size_t a = 0; a < c.size() && c[a].dt - t0 <= eps_sing; ++a) {
    for (std::size_t b = a + 1; b < c.size() && c[b].dt - t0 <= eps_sing; ++b) {
      tie = true;
      if (c[a].kind.shares_ball(c[b].kind)) {
        return (c[a].kind.is_floor() || c[b].kind.is_floor()) ? Singularity::LowerTwoAtFloor
                                                               : Singularity::Triple;
      }
    }
  }
  return tie ? Singularity::RegularSimultaneous : Singularity::None;
}

}  // namespace fallball
