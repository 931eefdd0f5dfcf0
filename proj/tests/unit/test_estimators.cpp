#include "doctest.h"

#include "fallball/estimators.hpp"
#include "fallball/tangent.hpp"

using namespace fallball;

TEST_SUITE("estimators") {
  TEST_CASE("no iterates leaves unit vectors at norm one") {
    const MassConfig cfg = make_mass_config({3.0, 2.0, 1.0}, 6.0);
    EnsembleSpec spec;
    spec.orbits = 3;
    spec.n_max = 0;
    spec.vectors = 50;
    const NoncontractionReport r = noncontraction_estimate(cfg, spec);
    CHECK(r.zeta == doctest::Approx(1.0).epsilon(1e-12));
    REQUIRE(r.per_n_min.size() == 1);
  }

  TEST_CASE("zeta is the minimum of the per-n minima and the witness attains it") {
    const MassConfig cfg = make_mass_config({3.0, 2.0, 1.0}, 6.0);
    EnsembleSpec spec;
    spec.orbits = 6;
    spec.n_max = 100;
    spec.vectors = 80;
    spec.jobs = 3;
    const NoncontractionReport r = noncontraction_estimate(cfg, spec);
    CHECK(r.zeta > 0.0);
    for (double x : r.per_n_min) CHECK(x >= r.zeta);
    CHECK(*std::min_element(r.per_n_min.begin(), r.per_n_min.end()) == r.zeta);
    CHECK(r.per_n_min[static_cast<std::size_t>(r.witness.n)] == r.zeta);
    CHECK(ht_norm(r.witness.vector, cfg.masses) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(q_form(r.witness.vector) >= -1e-12);
  }

  TEST_CASE("ensemble result does not depend on the thread count") {
    const MassConfig cfg = make_mass_config({2.0, 1.0}, 1.0);
    EnsembleSpec spec;
    spec.orbits = 5;
    spec.n_max = 50;
    spec.vectors = 30;
    spec.jobs = 1;
    const NoncontractionReport a = noncontraction_estimate(cfg, spec);
    spec.jobs = 4;
    const NoncontractionReport b = noncontraction_estimate(cfg, spec);
    CHECK(a.zeta == b.zeta);
    CHECK(a.per_n_min == b.per_n_min);
    CHECK(a.witness.orbit_seed == b.witness.orbit_seed);
  }

  TEST_CASE("tau with a tiny level equals the first strictly monotone event time") {
    const MassConfig cfg = make_mass_config({2.0, 1.0}, 1.0);
    BallState s0;
    s0.q = Vector::Zero(2);
    s0.v = Vector::Zero(2);
    s0.q << 0.0, 5.0;
    s0.v << 1.0, 0.0;
    Vector boundary(2);
    boundary << 1.0, 0.0;  // Q = 0; the floor shear lifts it by beta > 0
    const TauResult r = tau_e0(cfg, s0, {boundary}, 1e-300, 10);
    CHECK(!r.exceeded);
    CHECK(r.events == 1);
    CHECK(r.tau == doctest::Approx(2.0).epsilon(1e-15));
  }

  TEST_CASE("boundary vectors must pass the level too") {
    const MassConfig cfg = make_mass_config({2.0, 1.0}, 1.0);
    TauOptions opts;
    opts.vectors = 32;
    const auto vs = tau_vectors(2, opts, 7);
    int boundary = 0;
    for (const auto& v : vs) {
      CHECK(v.norm() == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(q_form(v) >= -1e-14);
      boundary += std::abs(q_form(v)) < 1e-14;
    }
    CHECK(boundary >= 4);
    const TauResult r = tau_e0(cfg, sample_state(cfg, 0), opts, 7);
    CHECK(!r.exceeded);
    CHECK(r.tau > 0.0);
  }

  TEST_CASE("tau ensemble reports the maximum over finite results") {
    const MassConfig cfg = make_mass_config({2.0, 1.0}, 1.0);
    const TauEnsembleReport r = tau_ensemble(cfg, 10, 0, {}, 2);
    CHECK(r.finite + r.exceeded + r.singular == 10);
    double mx = 0.0;
    for (const auto& e : r.entries) {
      if (e.result && !e.result->exceeded) mx = std::max(mx, e.result->tau);
    }
    CHECK(r.max_tau == mx);
  }

  TEST_CASE("CW invariance report covers every pair") {
    const MassConfig cfg = make_mass_config({3.0, 2.0, 1.0}, 6.0);
    const auto entries = cw_invariance_report(cfg, 100, 1);
    CHECK(entries.size() == 2);
    for (const auto& e : entries) {
      CHECK(e.samples > 0);
      CHECK(e.min_ratio <= e.max_ratio);
    }
  }
}
