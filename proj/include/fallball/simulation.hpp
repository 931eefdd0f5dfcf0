#pragma once

#include "fallball/dynamics.hpp"

#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

namespace fallball {

struct CollisionEvent {
  std::int64_t n = 0;  ///< ordinal within the orbit, starting at 0
  double t = 0.0;
  CollisionKind kind;
  Vector v_pre;
  Vector v_post;
  Vector q_at;
  Singularity singular = Singularity::None;

  int section() const noexcept { return kind.section(); }
  bool is_singular() const noexcept {
    return singular == Singularity::Triple || singular == Singularity::LowerTwoAtFloor;
  }
};

struct EventLog {
  MassConfig config;
  BallState initial;
  BallState final_state;
  std::vector<CollisionEvent> events;
  std::string branch;  ///< "" for an unsplit orbit, then "a"/"b" per split
  std::uint64_t seed = 0;
  bool depth_capped = false;  ///< stopped because the branch depth cap was reached
};

enum class SingularPolicy {
  Stop,     ///< throw SingularOrbitError
  Branch,   ///< continue along both collision orders
  Proceed,  ///< resolve in candidate order and flag the event
};

struct Horizon {
  std::int64_t max_events = std::numeric_limits<std::int64_t>::max();
  double max_time = std::numeric_limits<double>::infinity();

  static Horizon events(std::int64_t n) { return {n, std::numeric_limits<double>::infinity()}; }
  static Horizon time(double t) { return {std::numeric_limits<std::int64_t>::max(), t}; }
};

struct SimulationOptions {
  SingularPolicy policy = SingularPolicy::Stop;
  int max_branch_depth = 4;
  double eps_sing = kDefaultEpsSing;
  double drift_limit = 1e-8;  ///< relative energy drift that aborts the run
};

class SingularOrbitError : public Error {
 public:
  SingularOrbitError(Singularity kind, std::int64_t n, BallState state, NextCollision next);

  Singularity kind() const noexcept { return kind_; }
  std::int64_t event_index() const noexcept { return n_; }
  const BallState& state() const noexcept { return state_; }
  const NextCollision& next() const noexcept { return next_; }

 private:
  Singularity kind_;
  std::int64_t n_;
  BallState state_;
  NextCollision next_;
};

struct StepResult {
  BallState state;
  CollisionEvent event;
};

/// One application of the Poincare map: fly to the next collision and resolve it.
StepResult poincare_step(const MassConfig& cfg, const BallState& s, const SimulationOptions& opts = {},
                         std::int64_t n = 0);

/// Fly for dt and resolve the given collision there, snapping the touching
/// balls together. Used to pick one order at a singular event.
StepResult forced_step(const MassConfig& cfg, const BallState& s, CollisionKind kind, double dt,
                       std::int64_t n = 0);

/// Returns one log, or several when the orbit splits under SingularPolicy::Branch.
std::vector<EventLog> simulate(const MassConfig& cfg, const BallState& s0, Horizon horizon,
                               const SimulationOptions& opts = {}, std::uint64_t seed = 0);

/// Receives each event with the post-collision state; return false to stop.
using EventSink = std::function<bool(const CollisionEvent&, const BallState&)>;

/// Event loop without storing a log. SingularPolicy::Branch is treated as Stop.
BallState simulate_stream(const MassConfig& cfg, const BallState& s0, Horizon horizon,
                          const SimulationOptions& opts, const EventSink& sink);

/// Random post-floor state (q_1 = 0, v_1 >= 0) with H = c, reproducible from the seed.
/// Gaps are Exp(1) draws scaled so the potential energy is f*c with f ~ U(0.05, 0.95);
/// velocities are standard normal draws scaled to the remaining kinetic energy.
BallState sample_state(const MassConfig& cfg, std::uint64_t seed);

}  // namespace fallball
