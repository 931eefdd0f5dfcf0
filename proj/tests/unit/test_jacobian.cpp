#include "doctest.h"

#include "../support/oracles.hpp"
#include "fallball/cone_sampling.hpp"
#include "fallball/jacobian.hpp"
#include "fallball/tangent.hpp"

#include <random>

using namespace fallball;

namespace {

Vector vec(std::initializer_list<double> x) {
  return Eigen::Map<const Vector>(x.begin(), static_cast<Eigen::Index>(x.size()));
}

Matrix mat2(double a, double b, double c, double d) {
  Matrix m(2, 2);
  m << a, b, c, d;
  return m;
}

// Two-ball log: a floor event with m_1 v_1^- = -2 (beta = 1), then a pair
// event with alpha = 0.5.
EventLog two_event_log() {
  EventLog log;
  log.config = make_mass_config({1.0, 0.5}, 1.0);
  log.events.push_back(oracle::event(CollisionKind::floor(), vec({-2, 0})));
  log.events.push_back(oracle::event(CollisionKind::pair(1), vec({2.25, 0})));
  return log;
}

}  // namespace

TEST_SUITE("jacobian") {
  TEST_CASE("floor Jacobian of two balls") {
    const MassConfig cfg = make_mass_config({1.0, 0.5}, 1.0);
    const CollisionJacobian j = collision_jacobian(cfg, oracle::event(CollisionKind::floor(), vec({-2, 0})));
    CHECK(j.coefficient == 1.0);
    CHECK(j.matrix == mat2(1, 0, 1, 1));
  }

  TEST_CASE("pair Jacobian of two balls") {
    CHECK(pair_jacobian<double>(2, 1, 1.0 / 3.0, 0.5) == mat2(-1, -0.5, 0, -1));
    const MassConfig cfg = make_mass_config({1.0, 0.5}, 1.0);
    CHECK(pair_alpha(cfg, 1, vec({2.25, 0})) == doctest::Approx(0.5).epsilon(1e-15));
  }

  TEST_CASE("D block of three balls") {
    const double g = 0.2;
    const Matrix d1 = pair_d_block<double>(3, 1, g);
    Matrix e1(2, 2);
    e1 << -1, 1 + g, 0, 1;
    CHECK(d1 == e1);
    const Matrix d2 = pair_d_block<double>(3, 2, g);
    Matrix e2(2, 2);
    e2 << 1, 0, 1 - g, -1;
    CHECK(d2 == e2);
  }

  TEST_CASE("cocycle products") {
    const EventLog log = two_event_log();
    CHECK(cocycle<double>(log.config, log, 0, 0) == Matrix::Identity(2, 2));
    const Matrix p = cocycle<double>(log.config, log);
    CHECK((p - mat2(-1.5, -0.5, -1, -1)).cwiseAbs().maxCoeff() < 1e-15);
    const Vector v = vec({1, 1});
    const Vector pv = p * v;
    CHECK((pv - vec({-2, -2})).cwiseAbs().maxCoeff() < 1e-15);
    CHECK(q_form(v) == 1.0);
    CHECK(q_form(pv) == doctest::Approx(4.0));
  }

  TEST_CASE("cocycle refuses singular events") {
    EventLog log = two_event_log();
    log.events[1].singular = Singularity::Triple;
    CHECK_THROWS_AS(cocycle<double>(log.config, log, 0, 2), Error);
  }

  TEST_CASE("floor beta needs a moving lowest ball") {
    const MassConfig cfg = make_mass_config({1.0, 0.5}, 1.0);
    try {
      floor_beta(cfg, vec({0, 0}));
      FAIL("expected DegenerateBasePoint");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::DegenerateBasePoint);
    }
  }

  TEST_CASE("random Jacobians are symplectic with involutive D blocks and the stated Q increments") {
    std::mt19937_64 rng(17);
    std::normal_distribution<double> g;
    std::uniform_real_distribution<double> pos(0.01, 3.0);
    for (int trial = 0; trial < 1000; ++trial) {
      const int n = 2 + trial % 5;
      const auto m = oracle::random_masses(n, rng);
      const MassConfig cfg = make_mass_config(std::span<const double>(m), 1.0);
      const int d = n - 1;
      const Matrix j = oracle::symplectic(2 * d);
      const int i = trial % n;  // 0 = floor
      Vector vpre(n);
      for (auto& x : vpre) x = g(rng);
      CollisionEvent ev;
      if (i == 0) {
        vpre[0] = -pos(rng);
        ev = oracle::event(CollisionKind::floor(), vpre);
      } else {
        vpre[i] = vpre[i - 1] - pos(rng);
        ev = oracle::event(CollisionKind::pair(i), vpre);
      }
      const CollisionJacobian cj = collision_jacobian(cfg, ev);
      const Matrix& mm = cj.matrix;
      CHECK((mm.transpose() * j * mm - j).cwiseAbs().maxCoeff() < 1e-12);
      CHECK(symplectic_defect(mm) < 1e-12);
      CHECK((symplectic_inverse(mm) * mm - Matrix::Identity(2 * d, 2 * d)).cwiseAbs().maxCoeff() < 1e-12);
      if (i > 0) {
        const Matrix db = mm.topLeftCorner(d, d);
        CHECK((db * db - Matrix::Identity(d, d)).cwiseAbs().maxCoeff() <= 1e-15);
      }
      for (int k = 0; k < 10; ++k) {
        Vector v(2 * d);
        for (auto& x : v) x = g(rng);
        const double dq = q_form(mm * v) - q_form(v);
        const double expected = i == 0 ? cj.coefficient * v[0] * v[0] : cj.coefficient * v[d + i - 1] * v[d + i - 1];
        CHECK(dq >= -1e-12);
        CHECK(std::abs(dq - expected) <= 1e-12 * std::max(1.0, v.squaredNorm()));
      }
    }
  }
}

TEST_SUITE("cone_sampling") {
  TEST_CASE("samples lie in the closed cone and are reproducible") {
    ConeSampler a(3, 42), b(3, 42);
    for (int k = 0; k < 1000; ++k) {
      const Vector x = a.closed(0.3);
      CHECK(x == b.closed(0.3));
      CHECK(q_form(x) >= -1e-14 * x.squaredNorm());
      CHECK(x.norm() > 0.0);
    }
    ConeSampler c(2, 1);
    for (int k = 0; k < 100; ++k) {
      const Vector x = c.boundary();
      CHECK(std::abs(q_form(x)) <= 1e-14 * x.squaredNorm());
      CHECK(q_form(c.interior()) > 0.0);
    }
  }

  TEST_CASE("axis vectors lie on the boundary") {
    const auto axes = ConeSampler::axis_boundary(3);
    CHECK(axes.size() == 6);
    for (const auto& x : axes) CHECK(q_form(x) == 0.0);
  }
}
