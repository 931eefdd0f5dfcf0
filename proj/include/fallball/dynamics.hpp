#pragma once

#include "fallball/ball_state.hpp"
#include "fallball/mass_config.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace fallball {

/// Floor collision (index 0) or collision of balls (i, i+1) (index i >= 1).
struct CollisionKind {
  int index = 0;

  static constexpr CollisionKind floor() noexcept { return {0}; }
  static constexpr CollisionKind pair(int i) noexcept { return {i}; }

  constexpr bool is_floor() const noexcept { return index == 0; }
  /// Label of the section the post-collision state lies on (1 = floor).
  constexpr int section() const noexcept { return index + 1; }
  /// True when the two collisions involve a common ball.
  constexpr bool shares_ball(CollisionKind other) const noexcept {
    const int d = index - other.index;
    return d == 1 || d == -1;
  }

  friend constexpr bool operator==(CollisionKind, CollisionKind) = default;
};

std::string to_string(CollisionKind kind);

struct CollisionCandidate {
  CollisionKind kind;
  double dt = 0.0;
};

struct NextCollision {
  CollisionKind kind;
  double dt = 0.0;
  std::vector<CollisionCandidate> candidates;  ///< sorted by dt
  bool simultaneous = false;                   ///< runner-up within the tie tolerance
};

enum class Singularity {
  None,
  RegularSimultaneous,  ///< disjoint collisions at the same instant
  Triple,               ///< (i, i+1) and (i+1, i+2) at the same instant
  LowerTwoAtFloor,      ///< floor and (1, 2) at the same instant
};

const char* to_string(Singularity s) noexcept;

inline constexpr double kDefaultEpsSing = 1e-10;

/// Tie tolerance for event times.
inline double time_tolerance(double t) noexcept { return 1e-12 * std::max(1.0, std::abs(t)); }

double hamiltonian(const MassConfig& cfg, const BallState& s);
double kinetic_energy(const MassConfig& cfg, const Vector& v);
double momentum(const MassConfig& cfg, const Vector& v);

/// Closed-form free flight under unit gravity.
BallState advance(const BallState& s, double dt);
/// Same as advance but throws CollisionSkipped when a collision falls inside (0, dt).
BallState advance_guarded(const MassConfig& cfg, const BallState& s, double dt);

/// Time until a ball at height q with velocity v reaches the floor.
double floor_fall_time(double q, double v) noexcept;

NextCollision next_collision(const MassConfig& cfg, const BallState& s);

/// Velocity update of a collision without any precondition checks.
Vector collision_map(const MassConfig& cfg, const Vector& v, CollisionKind kind);

/// Checked collision: s must sit on the matching pre-collision set.
BallState apply_collision(const MassConfig& cfg, const BallState& s, CollisionKind kind, double tol = 1e-9);

Singularity detect_singularity(const NextCollision& next, double eps_sing = kDefaultEpsSing);

}  // namespace fallball
