#include "fallball/tangent.hpp"

namespace fallball {

const char* to_string(ConeRegion r) noexcept {
  switch (r) {
    case ConeRegion::Interior: return "interior";
    case ConeRegion::Boundary: return "boundary";
    case ConeRegion::ComplementInterior: return "complement-interior";
    case ConeRegion::Zero: return "zero";
  }
  return "unknown";
}

HVState to_hv(const MassConfig& cfg, const BallState& s) {
  HVState out;
  out.h = cfg.masses.cwiseProduct(0.5 * s.v.cwiseProduct(s.v) + s.q);
  out.v = s.v;
  return out;
}

}  // namespace fallball
