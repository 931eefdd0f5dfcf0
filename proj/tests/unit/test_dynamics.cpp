#include "doctest.h"

#include "../support/oracles.hpp"
#include "fallball/dynamics.hpp"

#include <random>

using namespace fallball;

namespace {

BallState state(std::initializer_list<double> q, std::initializer_list<double> v, double t = 0.0) {
  BallState s;
  s.t = t;
  s.q = Eigen::Map<const Vector>(q.begin(), static_cast<Eigen::Index>(q.size()));
  s.v = Eigen::Map<const Vector>(v.begin(), static_cast<Eigen::Index>(v.size()));
  return s;
}

}  // namespace

TEST_SUITE("dynamics") {
  TEST_CASE("hamiltonian of hand-evaluated states") {
    const MassConfig c3 = make_mass_config({3.0, 2.0, 1.0}, 6.0);
    const BallState s = state({0, 1, 2}, {1, 0, -1});
    CHECK(hamiltonian(c3, s) == doctest::Approx(6.0).epsilon(1e-15));
    CHECK(hamiltonian(c3, s) == doctest::Approx(oracle::energy(c3.masses, s.q, s.v)).epsilon(1e-15));
    CHECK(hamiltonian(c3, state({0, 0, 0}, {0, 0, 0})) == 0.0);
    const MassConfig c2 = make_mass_config({2.0, 1.0}, 1.0);
    CHECK(hamiltonian(c2, state({0, 0}, {1, 0})) == doctest::Approx(1.0).epsilon(1e-15));
  }

  TEST_CASE("free flight follows the parabola") {
    BallState s = advance(state({0}, {1}), 2.0);
    CHECK(s.q[0] == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(s.v[0] == -1.0);
    CHECK(s.t == 2.0);
    s = advance(state({1}, {0}), 1.0);
    CHECK(s.q[0] == 0.5);
    CHECK(s.v[0] == -1.0);
    const BallState a = state({0.3, 0.7}, {1.5, -0.25});
    const BallState b = advance(a, 0.0);
    CHECK(b.q == a.q);
    CHECK(b.v == a.v);
  }

  TEST_CASE("floor fall time") {
    CHECK(floor_fall_time(0.0, 3.0) == 6.0);
    CHECK(floor_fall_time(0.5, 0.0) == doctest::Approx(1.0).epsilon(1e-15));
    // Large upward speed with a tiny height: the root must not cancel away.
    const double t = floor_fall_time(1e-12, 1e3);
    CHECK(t * 1e3 - 0.5 * t * t + 1e-12 == doctest::Approx(0.0).epsilon(1e-9));
  }

  TEST_CASE("next collision picks the earliest closed form") {
    const MassConfig c2 = make_mass_config({2.0, 1.0}, 1.0);
    NextCollision nc = next_collision(c2, state({0, 1}, {1, 0}));
    CHECK(nc.kind == CollisionKind::pair(1));
    CHECK(nc.dt == doctest::Approx(1.0).epsilon(1e-15));
    REQUIRE(nc.candidates.size() >= 2);
    CHECK(nc.candidates[1].kind == CollisionKind::floor());
    CHECK(nc.candidates[1].dt == doctest::Approx(2.0).epsilon(1e-15));

    nc = next_collision(c2, state({0, 100}, {3, 3}));
    CHECK(nc.kind == CollisionKind::floor());
    CHECK(nc.dt == 6.0);

    const MassConfig c3 = make_mass_config({3.0, 2.0, 1.0}, 6.0);
    nc = next_collision(c3, state({0, 1, 2}, {1, 0, -1}));
    CHECK(nc.simultaneous);
    CHECK(nc.candidates[0].dt == doctest::Approx(1.0));
    CHECK(nc.candidates[1].dt == doctest::Approx(1.0));
    CHECK(detect_singularity(nc) == Singularity::Triple);
    const BallState at = advance(state({0, 1, 2}, {1, 0, -1}), nc.dt);
    for (int i = 0; i < 3; ++i) CHECK(at.q[i] == doctest::Approx(0.5).epsilon(1e-15));
  }

  TEST_CASE("singularity classification") {
    const MassConfig c2 = make_mass_config({2.0, 1.0}, 1.0);
    NextCollision nc = next_collision(c2, state({0, 1}, {0.5, -0.5}));
    CHECK(detect_singularity(nc) == Singularity::LowerTwoAtFloor);

    const MassConfig c4 = make_mass_config({4.0, 3.0, 2.0, 1.0}, 10.0);
    nc = next_collision(c4, state({0, 1, 2, 3}, {1, 0, 1, 0}));
    CHECK(nc.simultaneous);
    CHECK(detect_singularity(nc) == Singularity::RegularSimultaneous);

    nc = next_collision(c2, state({0, 1}, {1, 0}));
    CHECK(detect_singularity(nc) == Singularity::None);
  }

  TEST_CASE("collision maps") {
    const MassConfig c2 = make_mass_config({2.0, 1.0}, 1.0);
    BallState s = apply_collision(c2, state({0, 3}, {-2, 0}), CollisionKind::floor());
    CHECK(s.v[0] == 2.0);

    const MassConfig c31 = make_mass_config({3.0, 1.0}, 1.0);
    s = apply_collision(c31, state({1, 1}, {1, -1}), CollisionKind::pair(1));
    CHECK(s.v[0] == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(s.v[1] == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(momentum(c31, s.v) == doctest::Approx(2.0));
    CHECK(kinetic_energy(c31, s.v) == doctest::Approx(2.0));

    s = apply_collision(c2, state({1, 1}, {2, 0}), CollisionKind::pair(1));
    CHECK(s.v[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK(s.v[1] == doctest::Approx(8.0 / 3.0).epsilon(1e-15));
    const auto [w1, w2] = oracle::elastic(2.0, 1.0, 2.0, 0.0);
    CHECK(s.v[0] == doctest::Approx(w1).epsilon(1e-15));
    CHECK(s.v[1] == doctest::Approx(w2).epsilon(1e-15));
  }

  TEST_CASE("apply_collision refuses states off the section") {
    const MassConfig c2 = make_mass_config({2.0, 1.0}, 1.0);
    CHECK_THROWS_AS(apply_collision(c2, state({0, 1}, {1, 0}), CollisionKind::pair(1)), Error);
    CHECK_THROWS_AS(apply_collision(c2, state({0.5, 1}, {-1, 0}), CollisionKind::floor()), Error);
  }

  TEST_CASE("advance_guarded detects a skipped collision") {
    const MassConfig c2 = make_mass_config({2.0, 1.0}, 1.0);
    try {
      advance_guarded(c2, state({0, 1}, {1, 0}), 1.5);
      FAIL("expected CollisionSkipped");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::CollisionSkipped);
    }
    CHECK_NOTHROW(advance_guarded(c2, state({0, 1}, {1, 0}), 0.5));
  }

  TEST_CASE("pair map is an involution and matches the textbook formula") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> g;
    for (int trial = 0; trial < 2000; ++trial) {
      const int n = 2 + trial % 5;
      const auto m = oracle::random_masses(n, rng);
      const MassConfig cfg = make_mass_config(std::span<const double>(m), 1.0);
      Vector v(n);
      for (auto& x : v) x = g(rng);
      const int i = 1 + trial % (n - 1);
      const Vector w = collision_map(cfg, v, CollisionKind::pair(i));
      const auto [a, b] = oracle::elastic(m[i - 1], m[i], v[i - 1], v[i]);
      CHECK(std::abs(w[i - 1] - a) < 1e-13);
      CHECK(std::abs(w[i] - b) < 1e-13);
      CHECK((collision_map(cfg, w, CollisionKind::pair(i)) - v).cwiseAbs().maxCoeff() < 1e-14);
      CHECK(collision_map(cfg, collision_map(cfg, v, CollisionKind::floor()), CollisionKind::floor()) == v);
    }
  }
}
