#pragma once

#include "fallball/simulation.hpp"
#include "fallball/tangent.hpp"

#include <cstddef>

namespace fallball {

/// Derivative of one collision in reduced (dxi, deta) coordinates.
struct CollisionJacobian {
  Matrix matrix;
  CollisionKind kind;
  double coefficient = 0.0;  ///< beta for the floor, alpha_i for pair i
  bool grazing = false;      ///< pair collision with alpha_i below 1e-14
};

inline constexpr double kGrazingAlpha = 1e-14;

/// beta = -2 / (m_1 v_1^-).
double floor_beta(const MassConfig& cfg, const Vector& v_pre);
/// alpha_i = 2 m_i m_{i+1} (m_i - m_{i+1}) (v_i^- - v_{i+1}^-) / (m_i + m_{i+1})^2.
double pair_alpha(const MassConfig& cfg, int i, const Vector& v_pre);

/// [[I, 0], [B, I]] with B zero except B(0,0) = beta.
template <typename Scalar>
MatrixX<Scalar> floor_jacobian(int n_balls, const Scalar& beta) {
  const int d = n_balls - 1;
  MatrixX<Scalar> m = MatrixX<Scalar>::Identity(2 * d, 2 * d);
  m(d, 0) = beta;
  return m;
}

/// D_i: identity except row i-1, which reads (1 - gamma_i, -1, 1 + gamma_i)
/// around the diagonal, clipped to the reduced index range.
template <typename Scalar>
MatrixX<Scalar> pair_d_block(int n_balls, int i, const Scalar& gamma) {
  const int d = n_balls - 1;
  const int r = i - 1;
  MatrixX<Scalar> m = MatrixX<Scalar>::Identity(d, d);
  m(r, r) = Scalar(-1);
  if (r - 1 >= 0) m(r, r - 1) = Scalar(1) - gamma;
  if (r + 1 < d) m(r, r + 1) = Scalar(1) + gamma;
  return m;
}

/// [[D_i, F_i], [0, D_i^T]] with F_i zero except F(i-1, i-1) = -alpha_i.
template <typename Scalar>
MatrixX<Scalar> pair_jacobian(int n_balls, int i, const Scalar& gamma, const Scalar& alpha) {
  const int d = n_balls - 1;
  const MatrixX<Scalar> dblock = pair_d_block<Scalar>(n_balls, i, gamma);
  MatrixX<Scalar> m = MatrixX<Scalar>::Zero(2 * d, 2 * d);
  m.topLeftCorner(d, d) = dblock;
  m.bottomRightCorner(d, d) = dblock.transpose();
  m(i - 1, d + i - 1) = -alpha;
  return m;
}

/// Throws DegenerateBasePoint for a floor event with v_1^- = 0.
CollisionJacobian collision_jacobian(const MassConfig& cfg, const CollisionEvent& ev);

template <typename Scalar>
MatrixX<Scalar> collision_jacobian_as(const MassConfig& cfg, const CollisionEvent& ev) {
  if (ev.kind.is_floor()) return floor_jacobian<Scalar>(cfg.size(), Scalar(floor_beta(cfg, ev.v_pre)));
  return pair_jacobian<Scalar>(cfg.size(), ev.kind.index, Scalar(cfg.gamma(ev.kind.index)),
                               Scalar(pair_alpha(cfg, ev.kind.index, ev.v_pre)));
}

/// J = [[0, I], [-I, 0]].
template <typename Scalar>
MatrixX<Scalar> symplectic_form(int dim) {
  const int d = dim / 2;
  MatrixX<Scalar> j = MatrixX<Scalar>::Zero(dim, dim);
  j.topRightCorner(d, d).setIdentity();
  j.bottomLeftCorner(d, d) = -MatrixX<Scalar>::Identity(d, d);
  return j;
}

/// Largest entry of |M^T J M - J|.
double symplectic_defect(const Matrix& m);

/// Inverse of a symplectic matrix, -J M^T J, exact in floating point.
template <typename Derived>
MatrixX<typename Derived::Scalar> symplectic_inverse(const Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index d = m.rows() / 2;
  MatrixX<Scalar> out(m.rows(), m.cols());
  out.topLeftCorner(d, d) = m.bottomRightCorner(d, d).transpose();
  out.topRightCorner(d, d) = -m.topRightCorner(d, d).transpose();
  out.bottomLeftCorner(d, d) = -m.bottomLeftCorner(d, d).transpose();
  out.bottomRightCorner(d, d) = m.topLeftCorner(d, d).transpose();
  return out;
}

/// Chronological product J_{end-1} ... J_{begin} over events [begin, end).
/// Throws SingularEventInRange when the range contains a singular event.
template <typename Scalar = double>
MatrixX<Scalar> cocycle(const MassConfig& cfg, const EventLog& log, std::size_t begin, std::size_t end) {
  const int dim = 2 * (cfg.size() - 1);
  MatrixX<Scalar> prod = MatrixX<Scalar>::Identity(dim, dim);
  for (std::size_t k = begin; k < end; ++k) {
    const CollisionEvent& ev = log.events.at(k);
    if (ev.is_singular()) {
      throw Error(Errc::SingularEventInRange, "event " + std::to_string(ev.n) + " is " + to_string(ev.singular));
    }
    prod = (collision_jacobian_as<Scalar>(cfg, ev) * prod).eval();
  }
  return prod;
}

template <typename Scalar = double>
MatrixX<Scalar> cocycle(const MassConfig& cfg, const EventLog& log) {
  return cocycle<Scalar>(cfg, log, 0, log.events.size());
}

}  // namespace fallball
