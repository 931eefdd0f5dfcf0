#include "fallball/core.hpp"

namespace fallball {

const char* to_string(Errc code) noexcept {
  switch (code) {
    case Errc::TooFewBalls: return "TooFewBalls";
    case Errc::NonDecreasingMasses: return "NonDecreasingMasses";
    case Errc::NonPositiveMass: return "NonPositiveMass";
    case Errc::NonPositiveEnergy: return "NonPositiveEnergy";
    case Errc::CollisionSkipped: return "CollisionSkipped";
    case Errc::NotOnSection: return "NotOnSection";
    case Errc::SingularOrbit: return "SingularOrbit";
    case Errc::DegenerateContact: return "DegenerateContact";
    case Errc::EnergyInfeasible: return "EnergyInfeasible";
    case Errc::EnergyDrift: return "EnergyDrift";
    case Errc::DegenerateBasePoint: return "DegenerateBasePoint";
    case Errc::SingularEventInRange: return "SingularEventInRange";
    case Errc::NotMonotone: return "NotMonotone";
    case Errc::Incomplete: return "Incomplete";
    case Errc::WrongVariant: return "WrongVariant";
    case Errc::SingularEncountered: return "SingularEncountered";
    case Errc::WrongDimension: return "WrongDimension";
    case Errc::Infeasible: return "Infeasible";
    case Errc::NotSpecialMasses: return "NotSpecialMasses";
    case Errc::EdgeHit: return "EdgeHit";
    case Errc::UnknownKey: return "UnknownKey";
    case Errc::TypeMismatch: return "TypeMismatch";
    case Errc::MissingRequired: return "MissingRequired";
    case Errc::ParseError: return "ParseError";
    case Errc::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace fallball
