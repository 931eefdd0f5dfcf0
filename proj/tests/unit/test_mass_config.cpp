#include "doctest.h"

#include "../support/oracles.hpp"
#include "fallball/mass_config.hpp"

#include <random>

using namespace fallball;

TEST_SUITE("mass_config") {
  TEST_CASE("three balls 3,2,1 at c=6") {
    const MassConfig cfg = make_mass_config({3.0, 2.0, 1.0}, 6.0);
    CHECK(cfg.size() == 3);
    CHECK(cfg.gamma(1) == doctest::Approx(0.2).epsilon(1e-15));
    CHECK(cfg.gamma(2) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
    CHECK(cfg.tail_sums[0] == 6.0);
    CHECK(cfg.tail_sums[1] == 3.0);
    CHECK(cfg.tail_sums[2] == 1.0);
    CHECK(cfg.v_max == doctest::Approx(std::sqrt(12.0)).epsilon(1e-15));
  }

  TEST_CASE("two balls 2,1 at c=1") {
    const MassConfig cfg = make_mass_config({2.0, 1.0}, 1.0);
    CHECK(cfg.gamma(1) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
    CHECK(cfg.v_max == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
  }

  TEST_CASE("invalid inputs are rejected with their codes") {
    auto code = [](auto&& fn) {
      try {
        fn();
      } catch (const Error& e) {
        return e.code();
      }
      FAIL("no error");
      return Errc::Io;
    };
    CHECK(code([] { make_mass_config({1.0, 1.0}, 1.0); }) == Errc::NonDecreasingMasses);
    CHECK(code([] { make_mass_config({1.0, 2.0}, 1.0); }) == Errc::NonDecreasingMasses);
    CHECK(code([] { make_mass_config({1.0}, 1.0); }) == Errc::TooFewBalls);
    CHECK(code([] { make_mass_config({1.0, 0.0}, 1.0); }) == Errc::NonPositiveMass);
    CHECK(code([] { make_mass_config({2.0, 1.0}, 0.0); }) == Errc::NonPositiveEnergy);
  }

  TEST_CASE("gammas lie in (0,1) and v_max^2 m_N = 2c for random masses") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> energy(0.1, 20.0);
    for (int trial = 0; trial < 500; ++trial) {
      const int n = 2 + trial % 6;
      const auto m = oracle::random_masses(n, rng);
      const double c = energy(rng);
      const MassConfig cfg = make_mass_config(std::span<const double>(m), c);
      for (int i = 1; i < n; ++i) {
        CHECK(cfg.gamma(i) > 0.0);
        CHECK(cfg.gamma(i) < 1.0);
      }
      CHECK(cfg.v_max * cfg.v_max * m.back() == doctest::Approx(2.0 * c).epsilon(1e-13));
    }
  }
}
