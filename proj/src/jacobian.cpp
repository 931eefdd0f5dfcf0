#include "fallball/jacobian.hpp"

namespace fallball {

double floor_beta(const MassConfig& cfg, const Vector& v_pre) {
  if (v_pre[0] == 0.0) throw Error(Errc::DegenerateBasePoint, "floor collision with v_1 = 0");
  return -2.0 / (cfg.masses[0] * v_pre[0]);
}

double pair_alpha(const MassConfig& cfg, int i, const Vector& v_pre) {
  const double mi = cfg.mass(i);
  const double mj = cfg.mass(i + 1);
  const double sum = mi + mj;
  return 2.0 * mi * mj * (mi - mj) * (v_pre[i - 1] - v_pre[i]) / (sum * sum);
}

CollisionJacobian collision_jacobian(const MassConfig& cfg, const CollisionEvent& ev) {
  CollisionJacobian j;
  j.kind = ev.kind;
  if (ev.kind.is_floor()) {
    j.coefficient = floor_beta(cfg, ev.v_pre);
    j.matrix = floor_jacobian<double>(cfg.size(), j.coefficient);
  } else {
    j.coefficient = pair_alpha(cfg, ev.kind.index, ev.v_pre);
    j.grazing = j.coefficient < kGrazingAlpha;
    j.matrix = pair_jacobian<double>(cfg.size(), ev.kind.index, cfg.gamma(ev.kind.index), j.coefficient);
  }
  return j;
}

double symplectic_defect(const Matrix& m) {
  const Matrix j = symplectic_form<double>(static_cast<int>(m.rows()));
  return (m.transpose() * j * m - j).cwiseAbs().maxCoeff();
}

}  // namespace fallball
