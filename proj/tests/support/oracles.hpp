#pragma once

// Independent reference formulas used to check the library.

#include "fallball/simulation.hpp"

#include <cmath>
#include <random>

namespace fallball::oracle {

/// Textbook 1D elastic collision of masses m1 (below) and m2 (above).
inline std::pair<double, double> elastic(double m1, double m2, double v1, double v2) {
  const double s = m1 + m2;
  return {((m1 - m2) * v1 + 2.0 * m2 * v2) / s, (2.0 * m1 * v1 + (m2 - m1) * v2) / s};
}

/// sum m_i v_i^2 / 2 + m_i q_i, summed in reverse order.
inline double energy(const Vector& m, const Vector& q, const Vector& v) {
  double acc = 0.0;
  for (Eigen::Index i = m.size(); i-- > 0;) acc += m[i] * (0.5 * v[i] * v[i] + q[i]);
  return acc;
}

inline CollisionEvent event(CollisionKind kind, Vector v_pre, Vector v_post = {}, double t = 0.0) {
  CollisionEvent ev;
  ev.kind = kind;
  ev.t = t;
  ev.q_at = Vector::Zero(v_pre.size());
  ev.v_pre = std::move(v_pre);
  ev.v_post = v_post.size() ? std::move(v_post) : ev.v_pre;
  return ev;
}

/// Random strictly decreasing masses in (0.1, 5].
inline std::vector<double> random_masses(int n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.1, 5.0);
  std::vector<double> m(static_cast<std::size_t>(n));
  for (auto& x : m) x = u(rng);
  std::sort(m.rbegin(), m.rend());
  for (std::size_t i = 1; i < m.size(); ++i) {
    if (!(m[i] < m[i - 1])) m[i] = m[i - 1] * 0.9;
  }
  return m;
}

/// Symplectic form J = [[0, I], [-I, 0]].
inline Matrix symplectic(int dim) {
  const int d = dim / 2;
  Matrix j = Matrix::Zero(dim, dim);
  j.topRightCorner(d, d).setIdentity();
  j.bottomLeftCorner(d, d) = -Matrix::Identity(d, d);
  return j;
}

}  // namespace fallball::oracle
