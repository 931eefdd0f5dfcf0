#pragma once

#include <Eigen/Core>

#include <stdexcept>
#include <string>

namespace fallball {

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using Vector = VectorX<double>;
using Matrix = MatrixX<double>;

inline constexpr const char* kVersion = "0.1.0";

enum class Errc {
  TooFewBalls,
  NonDecreasingMasses,
  NonPositiveMass,
  NonPositiveEnergy,
  CollisionSkipped,
  NotOnSection,
  SingularOrbit,
  DegenerateContact,
  EnergyInfeasible,
  EnergyDrift,
  DegenerateBasePoint,
  SingularEventInRange,
  NotMonotone,
  Incomplete,
  WrongVariant,
  SingularEncountered,
  WrongDimension,
  Infeasible,
  NotSpecialMasses,
  EdgeHit,
  UnknownKey,
  TypeMismatch,
  MissingRequired,
  ParseError,
  Io,
};

const char* to_string(Errc code) noexcept;

/// Exception carrying a machine-readable error code.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace fallball
