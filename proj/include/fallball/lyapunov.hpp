#pragma once

#include "fallball/jacobian.hpp"

#include <cstdint>

namespace fallball {

/// Benettin scheme: carries an orthonormal frame through the cocycle and
/// re-orthonormalizes it with Householder QR every `reorth_every` factors.
class BenettinAccumulator {
 public:
  explicit BenettinAccumulator(int dim, int reorth_every = 1);

  void push(const Matrix& factor);
  std::int64_t steps() const noexcept { return steps_; }
  /// Growth rates per factor, sorted descending. All zero before any push.
  Vector exponents() const;

 private:
  static void orthonormalize(Matrix& frame, Vector& log_sums);

  Matrix frame_;
  Vector log_sums_;
  int every_;
  int pending_ = 0;
  std::int64_t steps_ = 0;
};

struct LyapunovResult {
  Vector exponents;  ///< per collision, descending
  std::int64_t steps = 0;
  double elapsed_time = 0.0;  ///< flight time covered by the steps

  /// Exponents per unit time.
  Vector per_time() const { return elapsed_time > 0.0 ? Vector(exponents * (steps / elapsed_time)) : exponents; }
};

LyapunovResult lyapunov_spectrum(const MassConfig& cfg, const EventLog& log, int reorth_every = 1);

/// Streams `steps` events from s0. Throws SingularOrbit at a singular event.
LyapunovResult lyapunov_spectrum(const MassConfig& cfg, const BallState& s0, std::int64_t steps,
                                 int reorth_every = 1);

}  // namespace fallball
