#include "fallball/mass_config.hpp"

#include <cmath>
#include <vector>

namespace fallball {

MassConfig make_mass_config(std::span<const double> masses, double energy) {
  const auto n = static_cast<Eigen::Index>(masses.size());
  if (n < 2) throw Error(Errc::TooFewBalls, "at least two balls are required");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(masses[i] > 0.0)) throw Error(Errc::NonPositiveMass, "mass " + std::to_string(i + 1) + " is not positive");
  }
  for (Eigen::Index i = 0; i + 1 < n; ++i) {
    if (!(masses[i] > masses[i + 1])) {
      throw Error(Errc::NonDecreasingMasses,
                  "masses must decrease strictly upwards (m_" + std::to_string(i + 1) + " <= m_" + std::to_string(i + 2) + ")");
    }
  }
  if (!(energy > 0.0)) throw Error(Errc::NonPositiveEnergy, "energy must be positive");

  MassConfig cfg;
  cfg.masses = Eigen::Map<const Vector>(masses.data(), n);
  cfg.gammas.resize(n - 1);
  for (Eigen::Index i = 0; i + 1 < n; ++i) {
    cfg.gammas[i] = (masses[i] - masses[i + 1]) / (masses[i] + masses[i + 1]);
  }
  cfg.tail_sums.resize(n);
  double acc = 0.0;
  for (Eigen::Index i = n - 1; i >= 0; --i) {
    acc += masses[i];
    cfg.tail_sums[i] = acc;
  }
  cfg.energy = energy;
  cfg.v_max = std::sqrt(2.0 * energy / masses[n - 1]);
  return cfg;
}

MassConfig make_mass_config(std::initializer_list<double> masses, double energy) {
  const std::vector<double> copy(masses);
  return make_mass_config(std::span<const double>(copy), energy);
}

}  // namespace fallball
