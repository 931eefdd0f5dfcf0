#pragma once

#include "fallball/jacobian.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace fallball {

/// Orbits start from sample_state(cfg, seed + k), k = 0 .. orbits-1.
struct EnsembleSpec {
  int orbits = 100;
  std::uint64_t seed = 0;
  std::int64_t n_max = 1000;
  int vectors = 1000;
  double boundary_fraction = 0.25;
  int jobs = 1;
};

struct NoncontractionWitness {
  std::uint64_t orbit_seed = 0;
  std::int64_t n = 0;
  Vector vector;  ///< HT-unit starting vector
  double value = 1.0;
};

struct NoncontractionReport {
  double zeta = 1.0;
  NoncontractionWitness witness;
  std::vector<double> per_n_min;  ///< minimum HT norm of the images after n events, n = 0 .. n_max
  std::vector<std::uint64_t> skipped_seeds;  ///< orbits that met a singular event before n_max
};

/// Minimum HT norm of d_xT^n v over sampled orbits, n <= n_max and HT-unit
/// vectors v of the closed cone.
NoncontractionReport noncontraction_estimate(const MassConfig& cfg, const EnsembleSpec& spec);

struct TauOptions {
  double e0 = 1.0;
  std::int64_t cutoff_events = 10000;
  int vectors = 256;
  double boundary_fraction = 0.5;
  bool include_axes = true;  ///< add the coordinate axes, which lie on the cone boundary
};

struct TauResult {
  bool exceeded = false;
  double tau = 0.0;          ///< flight time until every sampled vector has Q > E0
  std::int64_t events = 0;   ///< events needed (cutoff when exceeded)
};

/// Euclidean-unit vectors of the closed cone are carried along the orbit; Q is
/// checked at event times only since the flow derivative is the identity in
/// between. Throws SingularOrbit.
TauResult tau_e0(const MassConfig& cfg, const BallState& s0, const std::vector<Vector>& vectors, double e0,
                 std::int64_t cutoff_events);
TauResult tau_e0(const MassConfig& cfg, const BallState& s0, const TauOptions& opts, std::uint64_t vector_seed);

/// Closed-cone vectors used by tau_e0: random draws plus optional axes, all Euclidean-unit.
std::vector<Vector> tau_vectors(int d, const TauOptions& opts, std::uint64_t seed);

struct TauEnsembleEntry {
  std::uint64_t seed = 0;
  std::optional<TauResult> result;  ///< empty when the orbit hit a singular event
};

struct TauEnsembleReport {
  std::vector<TauEnsembleEntry> entries;
  double max_tau = 0.0;  ///< empirical uniform bound over finite results
  int finite = 0;
  int exceeded = 0;
  int singular = 0;
};

TauEnsembleReport tau_ensemble(const MassConfig& cfg, int seeds, std::uint64_t base_seed, const TauOptions& opts,
                               int jobs = 1);

struct CwInvarianceEntry {
  int pair = 0;
  int samples = 0;
  double min_ratio = 0.0;
  double max_ratio = 0.0;
  double max_deviation = 0.0;  ///< max |ratio - 1|
};

/// Measures |D_i^T deta|_CW / |deta|_CW over Gaussian deta for every pair i.
std::vector<CwInvarianceEntry> cw_invariance_report(const MassConfig& cfg, int samples, std::uint64_t seed);

}  // namespace fallball
