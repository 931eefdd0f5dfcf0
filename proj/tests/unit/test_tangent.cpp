#include "doctest.h"

#include "fallball/dynamics.hpp"
#include "fallball/tangent.hpp"

using namespace fallball;

namespace {

Vector vec(std::initializer_list<double> x) {
  return Eigen::Map<const Vector>(x.begin(), static_cast<Eigen::Index>(x.size()));
}

TangentVector<double> tv(std::initializer_list<double> dxi, std::initializer_list<double> deta) {
  return {vec(dxi), vec(deta)};
}

}  // namespace

TEST_SUITE("tangent") {
  TEST_CASE("quadratic form values") {
    CHECK(q_form(tv({1, 0}, {1, 0})) == 1.0);
    CHECK(q_form(tv({1, 2}, {2, -1})) == 0.0);
    CHECK(q_form(tv({1, 1}, {-1, 0})) == -1.0);
    CHECK(q_form(tv({1, 2}, {2, -1}).packed()) == 0.0);
  }

  TEST_CASE("cone membership") {
    CHECK(cone_membership(tv({1, 0}, {1, 0})) == ConeRegion::Interior);
    CHECK(cone_membership(tv({1, 2}, {2, -1})) == ConeRegion::Boundary);
    CHECK(cone_membership(tv({1, 1}, {-1, 0})) == ConeRegion::ComplementInterior);
    CHECK(cone_membership(tv({0, 0}, {0, 0})) == ConeRegion::Zero);
  }

  TEST_CASE("packing round-trip") {
    const auto u = tv({1, 2}, {3, 4});
    const auto back = TangentVector<double>::from_packed(u.packed());
    CHECK(back.dxi == u.dxi);
    CHECK(back.deta == u.deta);
  }

  TEST_CASE("CW and HT norms") {
    const Vector m3 = vec({3, 2, 1});
    CHECK(cw_norm(vec({1, 1}), m3) == 0.0);
    CHECK(cw_norm(vec({0, 1}), vec({1, 0.5, 0.25})) == 1.0);
    const Vector m2 = vec({2, 1});
    CHECK(cw_norm(vec({5}), m2) == 0.0);
    const Vector p = vec({0.3, -1.2});
    CHECK(ht_norm(p, m2) == doctest::Approx(p.norm()).epsilon(1e-15));
    const Vector q = vec({1, 0, 0, 1});
    CHECK(ht_norm(q, m3) == doctest::Approx(std::sqrt(2.0) + std::sqrt(1.0 / 3.0)).epsilon(1e-15));
  }

  TEST_CASE("per-ball energies") {
    const MassConfig cfg = make_mass_config({3.0, 2.0, 1.0}, 6.0);
    BallState s;
    s.q = vec({0, 1, 2});
    s.v = vec({1, 0, -1});
    const HVState hv = to_hv(cfg, s);
    CHECK(hv.h[0] == 1.5);
    CHECK(hv.h[1] == 2.0);
    CHECK(hv.h[2] == 2.5);
    CHECK(hv.h.sum() == doctest::Approx(hamiltonian(cfg, s)));
    s.q.setZero();
    s.v.setZero();
    CHECK(to_hv(cfg, s).h.isZero());
  }

  TEST_CASE("free flight keeps per-ball energies and shifts velocities") {
    const MassConfig cfg = make_mass_config({3.0, 2.0, 1.0}, 6.0);
    BallState s;
    s.q = vec({0.5, 1.5, 4});
    s.v = vec({1, -0.5, 2});
    const HVState a = to_hv(cfg, s);
    const HVState b = to_hv(cfg, advance(s, 0.37));
    CHECK((a.h - b.h).cwiseAbs().maxCoeff() < 1e-14);
    CHECK((b.v - (a.v.array() - 0.37).matrix()).cwiseAbs().maxCoeff() < 1e-15);
  }
}
