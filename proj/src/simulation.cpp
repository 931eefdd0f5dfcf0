#include "fallball/simulation.hpp"

#include <random>
#include <utility>

namespace fallball {

namespace {

bool is_split(Singularity s) { return s == Singularity::Triple || s == Singularity::LowerTwoAtFloor; }

// Puts the colliding balls exactly in contact after flight rounding.
void snap_contact(Vector& q, CollisionKind kind) {
  if (kind.is_floor()) {
    q[0] = 0.0;
    return;
  }
  const int i = kind.index - 1;
  const double mid = 0.5 * (q[i] + q[i + 1]);
  q[i] = mid;
  q[i + 1] = mid;
  if (i == 0 && q[0] < 0.0) q[0] = q[1] = 0.0;
}

// The two earliest candidates that share a ball, lower index first.
std::pair<CollisionCandidate, CollisionCandidate> split_pair(const NextCollision& next, double eps_sing) {
  const auto& c = next.candidates;
  const double t0 = c.front().dt;
  for (std::size_t a = 0; a < c.size() && c[a].dt - t0 <= eps_sing; ++a) {
    for (std::size_t b = a + 1; b < c.size() && c[b].dt - t0 <= eps_sing; ++b) {
      if (c[a].kind.shares_ball(c[b].kind)) {
        return c[a].kind.index < c[b].kind.index ? std::pair{c[a], c[b]} : std::pair{c[b], c[a]};
      }
    }
  }
  return {c[0], c[1]};
}

struct DriftGuard {
  double h0;
  double limit;

  void check(const MassConfig& cfg, const BallState& s) const {
    const double h = hamiltonian(cfg, s);
    const double scale = std::max(std::abs(h0), std::numeric_limits<double>::min());
    if (std::abs(h - h0) / scale > limit) {
      throw Error(Errc::EnergyDrift, "relative drift " + std::to_string(std::abs(h - h0) / scale) + " at t=" +
                                         std::to_string(s.t));
    }
  }
};

struct ContactWatch {
  bool last_stuck = false;

  void check(const CollisionEvent& ev, double dt) {
    const bool stuck = ev.kind.is_floor() && dt == 0.0 && ev.v_pre[0] == 0.0;
    if (stuck && last_stuck) {
      throw Error(Errc::DegenerateContact, "repeated zero-velocity floor contact at t=" + std::to_string(ev.t));
    }
    last_stuck = stuck;
  }
};

enum class LoopEnd { Horizon, Singular, Sink };

struct LoopResult {
  BallState state;
  std::int64_t n = 0;
  LoopEnd end = LoopEnd::Horizon;
  NextCollision next;
  Singularity singular = Singularity::None;
};

// Plain event loop. Stops at the horizon, when the sink asks to, or at a
// singular event that the policy does not resolve in place.
LoopResult run_loop(const MassConfig& cfg, BallState s, std::int64_t n, Horizon horizon,
                    const SimulationOptions& opts, const DriftGuard& guard, ContactWatch& watch,
                    const std::function<bool(const CollisionEvent&, const BallState&)>& sink) {
  LoopResult out;
  while (n < horizon.max_events) {
    NextCollision next = next_collision(cfg, s);
    if (s.t + next.dt > horizon.max_time) break;
    const Singularity sing = detect_singularity(next, opts.eps_sing);
    if (is_split(sing) && opts.policy != SingularPolicy::Proceed) {
      out.end = LoopEnd::Singular;
      out.next = std::move(next);
      out.singular = sing;
      break;
    }
    StepResult r = forced_step(cfg, s, next.kind, next.dt, n);
    r.event.singular = sing;
    watch.check(r.event, next.dt);
    guard.check(cfg, r.state);
    s = std::move(r.state);
    ++n;
    if (!sink(r.event, s)) {
      out.end = LoopEnd::Sink;
      break;
    }
  }
  out.state = std::move(s);
  out.n = n;
  return out;
}

void run_branch(const MassConfig& cfg, const BallState& s, Horizon horizon, const SimulationOptions& opts,
                const DriftGuard& guard, EventLog log, int depth, std::vector<EventLog>& out) {
  ContactWatch watch;
  LoopResult r = run_loop(cfg, s, static_cast<std::int64_t>(log.events.size()), horizon, opts, guard, watch,
                          [&log](const CollisionEvent& ev, const BallState&) {
                            log.events.push_back(ev);
                            return true;
                          });
  log.final_state = r.state;
  if (r.end != LoopEnd::Singular) {
    out.push_back(std::move(log));
    return;
  }
  if (opts.policy == SingularPolicy::Stop) throw SingularOrbitError(r.singular, r.n, r.state, r.next);
  if (depth >= opts.max_branch_depth) {
    log.depth_capped = true;
    out.push_back(std::move(log));
    return;
  }
  const auto [first, second] = split_pair(r.next, opts.eps_sing);
  const double dt = r.next.dt;
  for (const auto& [leading, tag] : {std::pair{first, 'a'}, std::pair{second, 'b'}}) {
    EventLog child = log;
    child.branch.push_back(tag);
    StepResult step = forced_step(cfg, r.state, leading.kind, dt, r.n);
    step.event.singular = r.singular;
    guard.check(cfg, step.state);
    child.events.push_back(step.event);
    run_branch(cfg, step.state, horizon, opts, guard, std::move(child), depth + 1, out);
  }
}

}  // namespace

SingularOrbitError::SingularOrbitError(Singularity kind, std::int64_t n, BallState state, NextCollision next)
    : Error(Errc::SingularOrbit, std::string(to_string(kind)) + " collision ahead of event " + std::to_string(n) +
                                     " at t=" + std::to_string(state.t + next.dt)),
      kind_(kind),
      n_(n),
      state_(std::move(state)),
      next_(std::move(next)) {}

StepResult forced_step(const MassConfig& cfg, const BallState& s, CollisionKind kind, double dt, std::int64_t n) {
  StepResult r;
  r.state = advance(s, dt);
  snap_contact(r.state.q, kind);
  r.event.n = n;
  r.event.t = r.state.t;
  r.event.kind = kind;
  r.event.q_at = r.state.q;
  r.event.v_pre = r.state.v;
  r.state.v = collision_map(cfg, r.state.v, kind);
  r.event.v_post = r.state.v;
  return r;
}

StepResult poincare_step(const MassConfig& cfg, const BallState& s, const SimulationOptions& opts, std::int64_t n) {
  const NextCollision next = next_collision(cfg, s);
  const Singularity sing = detect_singularity(next, opts.eps_sing);
  if (is_split(sing) && opts.policy == SingularPolicy::Stop) throw SingularOrbitError(sing, n, s, next);
  StepResult r = forced_step(cfg, s, next.kind, next.dt, n);
  r.event.singular = sing;
  return r;
}

std::vector<EventLog> simulate(const MassConfig& cfg, const BallState& s0, Horizon horizon,
                               const SimulationOptions& opts, std::uint64_t seed) {
  EventLog log;
  log.config = cfg;
  log.initial = s0;
  log.final_state = s0;
  log.seed = seed;
  std::vector<EventLog> out;
  const DriftGuard guard{hamiltonian(cfg, s0), opts.drift_limit};
  run_branch(cfg, s0, horizon, opts, guard, std::move(log), 0, out);
  return out;
}

BallState simulate_stream(const MassConfig& cfg, const BallState& s0, Horizon horizon,
                          const SimulationOptions& opts, const EventSink& sink) {
  const DriftGuard guard{hamiltonian(cfg, s0), opts.drift_limit};
  ContactWatch watch;
  LoopResult r = run_loop(cfg, s0, 0, horizon, opts, guard, watch, sink);
  if (r.end == LoopEnd::Singular) throw SingularOrbitError(r.singular, r.n, r.state, r.next);
  return r.state;
}

BallState sample_state(const MassConfig& cfg, std::uint64_t seed) {
  const int n = cfg.size();
  std::mt19937_64 rng(seed);
  std::exponential_distribution<double> gap_dist(1.0);
  std::uniform_real_distribution<double> frac_dist(0.05, 0.95);
  std::normal_distribution<double> vel_dist(0.0, 1.0);
  constexpr int kAttempts = 64;
  for (int attempt = 0; attempt < kAttempts; ++attempt) {
    BallState s;
    s.q = Vector::Zero(n);
    s.v = Vector::Zero(n);
    for (int i = 1; i < n; ++i) s.q[i] = s.q[i - 1] + gap_dist(rng);
    const double potential_target = frac_dist(rng) * cfg.energy;
    const double potential = cfg.masses.dot(s.q);
    if (potential > 0.0) s.q *= potential_target / potential;
    for (int i = 0; i < n; ++i) s.v[i] = vel_dist(rng);
    s.v[0] = std::abs(s.v[0]);
    const double kinetic_target = cfg.energy - cfg.masses.dot(s.q);
    const double kinetic = kinetic_energy(cfg, s.v);
    if (!(kinetic_target > 0.0) || !(kinetic > 0.0)) continue;
    s.v *= std::sqrt(kinetic_target / kinetic);
    return s;
  }
  throw Error(Errc::EnergyInfeasible, "no admissible state after " + std::to_string(kAttempts) + " draws");
}

}  // namespace fallball
