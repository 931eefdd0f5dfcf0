#pragma once

#include "fallball/core.hpp"

#include <span>

namespace fallball {

/// Masses of the stacked balls (bottom to top) together with the energy level
/// of the orbit. Built through make_mass_config, which enforces
/// m_1 > ... > m_N > 0 and c > 0.
struct MassConfig {
  Vector masses;     ///< m_1 .. m_N
  Vector gammas;     ///< gamma_i = (m_i - m_{i+1}) / (m_i + m_{i+1}), i = 1..N-1
  Vector tail_sums;  ///< M_i = m_i + ... + m_N
  double energy = 0.0;
  double v_max = 0.0;  ///< sqrt(2c / m_N), the largest speed any ball can reach

  int size() const noexcept { return static_cast<int>(masses.size()); }
  double mass(int ball) const { return masses[ball - 1]; }    ///< 1-based
  double gamma(int pair) const { return gammas[pair - 1]; }   ///< 1-based pair (i, i+1)
};

MassConfig make_mass_config(std::span<const double> masses, double energy);
MassConfig make_mass_config(std::initializer_list<double> masses, double energy);

}  // namespace fallball
