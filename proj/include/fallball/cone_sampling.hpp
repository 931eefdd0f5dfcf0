#pragma once

#include "fallball/core.hpp"

#include <cstdint>
#include <random>
#include <vector>

namespace fallball {

/// Random vectors of the closed cone Q >= 0 in packed (dxi; deta) form.
/// dxi is uniform on the unit sphere and deta = lambda * dxi + w with w
/// orthogonal to dxi, so Q = lambda. lambda = tan(theta) with theta uniform on
/// (0, pi/2); boundary draws use lambda = 0. The roles of dxi and deta are
/// swapped with probability 1/2, which also yields boundary vectors (0, deta).
class ConeSampler {
 public:
  ConeSampler(int d, std::uint64_t seed);

  Vector interior();
  Vector boundary();
  /// Boundary draw with the given probability, interior draw otherwise.
  Vector closed(double boundary_fraction);

  /// Coordinate axes of both blocks; all of them have Q = 0.
  static std::vector<Vector> axis_boundary(int d);

 private:
  Vector draw(double lambda);

  int d_;
  std::mt19937_64 rng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

}  // namespace fallball
