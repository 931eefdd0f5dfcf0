#pragma once

#include "fallball/ball_state.hpp"
#include "fallball/mass_config.hpp"

#include <cmath>

namespace fallball {

/// Reduced tangent vector (dxi, deta), each of length N-1. Packed form is the
/// column (dxi; deta) of length 2N-2 that the Jacobians act on.
template <typename Scalar>
struct TangentVector {
  VectorX<Scalar> dxi;
  VectorX<Scalar> deta;

  static TangentVector from_packed(const VectorX<Scalar>& packed) {
    const Eigen::Index d = packed.size() / 2;
    return {packed.head(d), packed.tail(d)};
  }
  VectorX<Scalar> packed() const {
    VectorX<Scalar> out(dxi.size() + deta.size());
    out << dxi, deta;
    return out;
  }
};

/// Q(dxi, deta) = <dxi, deta> on a packed vector.
template <typename Derived>
typename Derived::Scalar q_form(const Eigen::MatrixBase<Derived>& packed) {
  const Eigen::Index d = packed.size() / 2;
  return packed.head(d).dot(packed.tail(d));
}

template <typename Scalar>
Scalar q_form(const TangentVector<Scalar>& u) {
  return u.dxi.dot(u.deta);
}

enum class ConeRegion { Interior, Boundary, ComplementInterior, Zero };

const char* to_string(ConeRegion r) noexcept;

/// Sign of Q with |Q| <= tol * |u|^2 counted as the boundary.
template <typename Derived>
ConeRegion cone_membership(const Eigen::MatrixBase<Derived>& packed, double tol = 1e-12) {
  const double norm2 = static_cast<double>(packed.squaredNorm());
  if (norm2 == 0.0) return ConeRegion::Zero;
  const double q = static_cast<double>(q_form(packed));
  if (q > tol * norm2) return ConeRegion::Interior;
  if (q < -tol * norm2) return ConeRegion::ComplementInterior;
  return ConeRegion::Boundary;
}

inline ConeRegion cone_membership(const TangentVector<double>& u, double tol = 1e-12) {
  return cone_membership(u.packed(), tol);
}

/// sqrt(sum_{i=1}^{N-2} (deta_{i+1} - deta_i)^2 / m_i). Vanishes on constant deta.
template <typename Derived>
double cw_norm(const Eigen::MatrixBase<Derived>& deta, const Vector& masses) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i + 1 < deta.size(); ++i) {
    const double diff = static_cast<double>(deta[i + 1] - deta[i]);
    acc += diff * diff / masses[i];
  }
  return std::sqrt(acc);
}

/// Euclidean norm of (dxi, deta) plus the CW part of deta.
template <typename Derived>
double ht_norm(const Eigen::MatrixBase<Derived>& packed, const Vector& masses) {
  const Eigen::Index d = packed.size() / 2;
  return static_cast<double>(packed.norm()) + cw_norm(packed.tail(d), masses);
}

inline double ht_norm(const TangentVector<double>& u, const Vector& masses) { return ht_norm(u.packed(), masses); }

/// Per-ball energies h_i = m_i v_i^2 / 2 + m_i q_i together with the velocities.
struct HVState {
  Vector h;
  Vector v;
};

HVState to_hv(const MassConfig& cfg, const BallState& s);

}  // namespace fallball
