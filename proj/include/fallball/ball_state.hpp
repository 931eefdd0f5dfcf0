#pragma once

#include "fallball/core.hpp"

namespace fallball {

/// Heights and velocities of the balls at time t. Heights are measured from
/// the floor and stay ordered 0 <= q_1 <= ... <= q_N along any orbit.
struct BallState {
  double t = 0.0;
  Vector q;
  Vector v;

  int size() const noexcept { return static_cast<int>(q.size()); }
};

}  // namespace fallball
