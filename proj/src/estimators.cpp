#include "fallball/estimators.hpp"

#include "fallball/cone_sampling.hpp"
#include "fallball/parallel.hpp"

#include <algorithm>
#include <limits>
#include <random>

namespace fallball {

namespace {

// Separates vector streams from orbit streams drawn with the same seed.
constexpr std::uint64_t kVectorStream = 0x9e3779b97f4a7c15ULL;

struct OrbitMinima {
  bool singular = false;
  std::vector<double> per_n;
  std::int64_t argmin_n = 0;
  Vector argmin_vector;
  double min_value = std::numeric_limits<double>::infinity();
};

OrbitMinima scan_orbit(const MassConfig& cfg, const EnsembleSpec& spec, std::uint64_t seed) {
  OrbitMinima out;
  std::vector<EventLog> logs;
  try {
    logs = simulate(cfg, sample_state(cfg, seed), Horizon::events(spec.n_max));
  } catch (const SingularOrbitError&) {
    out.singular = true;
    return out;
  }
  const int d = cfg.size() - 1;
  ConeSampler sampler(d, seed ^ kVectorStream);
  Matrix start(2 * d, spec.vectors);
  for (int k = 0; k < spec.vectors; ++k) {
    Vector v = sampler.closed(spec.boundary_fraction);
    start.col(k) = v / ht_norm(v, cfg.masses);
  }
  Matrix images = start;
  auto record = [&](std::int64_t n) {
    double row_min = std::numeric_limits<double>::infinity();
    Eigen::Index arg = 0;
    for (Eigen::Index k = 0; k < images.cols(); ++k) {
      const double value = ht_norm(images.col(k), cfg.masses);
      if (value < row_min) {
        row_min = value;
        arg = k;
      }
    }
    out.per_n.push_back(row_min);
    if (row_min < out.min_value) {
      out.min_value = row_min;
      out.argmin_n = n;
      out.argmin_vector = start.col(arg);
    }
  };
  record(0);
  const auto& events = logs.front().events;
  for (std::size_t k = 0; k < events.size(); ++k) {
    images = (collision_jacobian(cfg, events[k]).matrix * images).eval();
    record(static_cast<std::int64_t>(k) + 1);
  }
  return out;
}

}  // namespace

NoncontractionReport noncontraction_estimate(const MassConfig& cfg, const EnsembleSpec& spec) {
  std::vector<OrbitMinima> orbits(static_cast<std::size_t>(spec.orbits));
  parallel_for(orbits.size(), spec.jobs,
               [&](std::size_t k) { orbits[k] = scan_orbit(cfg, spec, spec.seed + k); });
  NoncontractionReport report;
  report.per_n_min.assign(static_cast<std::size_t>(spec.n_max) + 1, std::numeric_limits<double>::infinity());
  report.zeta = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < orbits.size(); ++k) {
    const OrbitMinima& o = orbits[k];
    const std::uint64_t seed = spec.seed + k;
    if (o.singular) {
      report.skipped_seeds.push_back(seed);
      continue;
    }
    for (std::size_t n = 0; n < o.per_n.size(); ++n) report.per_n_min[n] = std::min(report.per_n_min[n], o.per_n[n]);
    if (o.min_value < report.zeta) {
      report.zeta = o.min_value;
      report.witness = {seed, o.argmin_n, o.argmin_vector, o.min_value};
    }
  }
  return report;
}

std::vector<Vector> tau_vectors(int d, const TauOptions& opts, std::uint64_t seed) {
  std::vector<Vector> out;
  if (opts.include_axes) out = ConeSampler::axis_boundary(d);
  ConeSampler sampler(d, seed);
  for (int k = 0; k < opts.vectors; ++k) out.push_back(sampler.closed(opts.boundary_fraction).normalized());
  return out;
}

TauResult tau_e0(const MassConfig& cfg, const BallState& s0, const std::vector<Vector>& vectors, double e0,
                 std::int64_t cutoff_events) {
  const int dim = 2 * (cfg.size() - 1);
  Matrix active(dim, static_cast<Eigen::Index>(vectors.size()));
  for (std::size_t k = 0; k < vectors.size(); ++k) active.col(static_cast<Eigen::Index>(k)) = vectors[k];
  TauResult result;
  result.exceeded = true;
  result.events = cutoff_events;
  // Q never decreases, so a vector that passed E0 can be dropped.
  auto prune = [&] {
    Eigen::Index kept = 0;
    for (Eigen::Index k = 0; k < active.cols(); ++k) {
      if (!(q_form(active.col(k)) > e0)) active.col(kept++) = active.col(k);
    }
    active.conservativeResize(Eigen::NoChange, kept);
    return kept == 0;
  };
  if (prune()) return {false, 0.0, 0};
  SimulationOptions opts;
  opts.policy = SingularPolicy::Stop;
  simulate_stream(cfg, s0, Horizon::events(cutoff_events), opts, [&](const CollisionEvent& ev, const BallState&) {
    active = (collision_jacobian(cfg, ev).matrix * active).eval();
    if (prune()) {
      result = {false, ev.t - s0.t, ev.n + 1};
      return false;
    }
    return true;
  });
  return result;
}

TauResult tau_e0(const MassConfig& cfg, const BallState& s0, const TauOptions& opts, std::uint64_t vector_seed) {
  return tau_e0(cfg, s0, tau_vectors(cfg.size() - 1, opts, vector_seed), opts.e0, opts.cutoff_events);
}

TauEnsembleReport tau_ensemble(const MassConfig& cfg, int seeds, std::uint64_t base_seed, const TauOptions& opts,
                               int jobs) {
  TauEnsembleReport report;
  report.entries.resize(static_cast<std::size_t>(seeds));
  parallel_for(report.entries.size(), jobs, [&](std::size_t k) {
    const std::uint64_t seed = base_seed + k;
    report.entries[k].seed = seed;
    try {
      report.entries[k].result = tau_e0(cfg, sample_state(cfg, seed), opts, seed ^ kVectorStream);
    } catch (const SingularOrbitError&) {
      report.entries[k].result.reset();
    }
  });
  for (const auto& e : report.entries) {
    if (!e.result) {
      ++report.singular;
    } else if (e.result->exceeded) {
      ++report.exceeded;
    } else {
      ++report.finite;
      report.max_tau = std::max(report.max_tau, e.result->tau);
    }
  }
  return report;
}

std::vector<CwInvarianceEntry> cw_invariance_report(const MassConfig& cfg, int samples, std::uint64_t seed) {
  const int n = cfg.size();
  const int d = n - 1;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<CwInvarianceEntry> out;
  for (int i = 1; i < n; ++i) {
    const Matrix dt = pair_d_block<double>(n, i, cfg.gamma(i)).transpose();
    CwInvarianceEntry e;
    e.pair = i;
    e.min_ratio = std::numeric_limits<double>::infinity();
    e.max_ratio = 0.0;
    for (int s = 0; s < samples; ++s) {
      Vector eta(d);
      for (int k = 0; k < d; ++k) eta[k] = normal(rng);
      const double base = cw_norm(eta, cfg.masses);
      if (!(base > 0.0)) continue;
      const double ratio = cw_norm(dt * eta, cfg.masses) / base;
      e.min_ratio = std::min(e.min_ratio, ratio);
      e.max_ratio = std::max(e.max_ratio, ratio);
      e.max_deviation = std::max(e.max_deviation, std::abs(ratio - 1.0));
      ++e.samples;
    }
    if (e.samples == 0) e.min_ratio = e.max_ratio = 0.0;
    out.push_back(e);
  }
  return out;
}

}  // namespace fallball
