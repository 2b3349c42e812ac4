#include <cmath>
#include <numbers>
#include <stdexcept>

#include <boost/math/special_functions/erf.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "doctest.h"
#include "rflab/coupling.hpp"
#include "rflab/parallel.hpp"

using namespace rflab;

TEST_CASE("Bessel survival bound equals the regularized lower incomplete gamma function") {
  for (double delta : {0.2, 0.5, 1.0, 1.5, 1.9})
    for (double D : {0.01, 0.3, 2.0})
      for (double s : {0.01, 0.1, 1.0}) {
        const double expected = boost::math::gamma_p(1.0 - delta / 2.0, D / s);
        CHECK(bessel_survival_bound(delta, D, s) == doctest::Approx(expected).epsilon(1e-10));
      }
}

TEST_CASE("Bessel survival bound at reference points") {
  // Reference values from an independent 30-digit evaluation.
  CHECK(bessel_survival_bound(1.0, 1.0, 1.0) == doctest::Approx(0.842700792949714869).epsilon(1e-12));
  CHECK(bessel_survival_bound(0.5, 0.3, 0.1) == doctest::Approx(0.971045167045093599).epsilon(1e-12));
  CHECK(bessel_survival_bound(1.5, 0.02, 0.01) == doctest::Approx(0.982713988140483227).epsilon(1e-12));
  CHECK(bessel_survival_bound(1.2, 2.0, 0.5) == doctest::Approx(0.996807371002870779).epsilon(1e-12));
}

TEST_CASE("Bessel survival bound is monotone in s and validates arguments") {
  double prev = 1.0;
  for (int k = 1; k <= 50; ++k) {
    const double v = bessel_survival_bound(1.0, 0.05, 0.01 * k);
    CHECK(v <= prev + 1e-15);
    prev = v;
  }
  CHECK_THROWS(bessel_survival_bound(2.0, 1.0, 1.0));
  CHECK_THROWS(bessel_survival_bound(0.0, 1.0, 1.0));
  CHECK_THROWS(bessel_survival_bound(1.0, -1.0, 1.0));
}

TEST_CASE("Gaussian hitting tail is the error function") {
  CHECK(gaussian_hit_tail(1.0, 1.0) == doctest::Approx(0.682689492137085897).epsilon(1e-14));
  CHECK(gaussian_hit_tail(0.3, 0.04) == doctest::Approx(0.866385597462283868).epsilon(1e-14));
  CHECK(gaussian_hit_tail(0.7, 2.5) == doctest::Approx(boost::math::erf(0.7 / std::sqrt(5.0))).epsilon(1e-14));
  CHECK_THROWS(gaussian_hit_tail(0.0, 1.0));
}

TEST_CASE("distance drift formulas") {
  CHECK(drift_hyperbolic(0.7, 1.3, 0.5) == doctest::Approx(0.612387597260332820).epsilon(1e-13));
  CHECK(drift_hyperbolic(1.1, 1.1, 0.8) == doctest::Approx(1.21 * std::tanh(0.4)));
  CHECK(drift_flat(1.0, 1.0, 0.3) == 0.0);
  CHECK(drift_flat(0.5, 1.5, 0.25) == doctest::Approx(2.0));
  // The hyperbolic drift approaches the flat one at short distance when a != b.
  CHECK(drift_hyperbolic(0.8, 1.2, 1e-4) / drift_flat(0.8, 1.2, 1e-4) == doctest::Approx(1.0).epsilon(1e-4));
}

TEST_CASE("reporting dimension") {
  CHECK(reporting_dimension(1.0, 1.0) == 1.0);
  CHECK(reporting_dimension(1.0, 3.0) == doctest::Approx(1.25));
}

TEST_CASE("flat mirror step moves the distance by the projected increment") {
  const auto sol = FlowSolution::constant(16, 0.0, 1.0);
  const CouplingState s = make_coupling_state({0.2, 0.3}, {0.35, 0.3});
  const double a = std::numbers::sqrt2;
  const TangentVec dw{0.01, -0.02};
  const CouplingState n = mirror_step_with(s, sol, 1.0, 1e-6, dw);
  CHECK(n.rho == doctest::Approx(0.15 - 2.0 * a * 0.01).epsilon(1e-12));
  // The orthogonal component is copied, the parallel one reflected.
  CHECK(n.x.x2 - s.x.x2 == doctest::Approx(n.y.x2 - s.y.x2).epsilon(1e-12));
  CHECK(n.x.x1 - s.x.x1 == doctest::Approx(-(n.y.x1 - s.y.x1)).epsilon(1e-12));
  CHECK(n.tau == doctest::Approx(1e-6));
}

TEST_CASE("mirror step couples particles within the threshold and then freezes") {
  const auto sol = FlowSolution::constant(16, 0.0, 1.0);
  const CouplingState s = make_coupling_state({0.2, 0.3}, {0.2 + 2e-3, 0.3});
  const double dt = 1e-6;
  CHECK(coupling_threshold(dt) == doctest::Approx(2e-3));
  const CouplingState n = mirror_step_with(s, sol, 1.0, dt, {1e-3 / std::numbers::sqrt2, 0.0});
  CHECK(n.coupled);
  const CouplingState m = mirror_step_with(n, sol, 1.0, dt, {0.05, 0.05});
  CHECK(m.coupled);
  CHECK(m.x.x1 == n.x.x1);
}

TEST_CASE("coupling survival is reproducible and independent of the worker count") {
  const auto sol = FlowSolution::constant(16, 0.0, 1.0);
  set_worker_count(1);
  const SurvivalCurve a = coupling_survival(sol, 0.02, {0.1, 0.1}, {0.15, 0.1}, 400, 1e-4, 7, {0.005, 0.01, 0.02});
  set_worker_count(3);
  const SurvivalCurve b = coupling_survival(sol, 0.02, {0.1, 0.1}, {0.15, 0.1}, 400, 1e-4, 7, {0.005, 0.01, 0.02});
  set_worker_count(1);
  REQUIRE(a.survival.size() == 3);
  for (std::size_t k = 0; k < 3; ++k) CHECK(a.survival[k] == b.survival[k]);
  CHECK(a.survival[0] >= a.survival[1]);
  CHECK(a.survival[1] >= a.survival[2]);
}

TEST_CASE("flat coupling survival matches the Gaussian hitting tail") {
  // With a = b = sqrt2 the distance is rho0 - 2 sqrt2 B, so P(s < sigma) = erf(rho0 / (4 sqrt s)).
  const auto sol = FlowSolution::constant(16, 0.0, 1.0);
  const double rho0 = 0.05, s = 0.001;
  const SurvivalCurve c = coupling_survival(sol, s, {0.3, 0.3}, {0.35, 0.3}, 4000, 1e-6, 21, {s});
  const double expected = gaussian_hit_tail(rho0, 8.0 * s);
  // The discrete monitor misses some crossings; the bias is of order sqrt(dt) / rho0.
  CHECK(std::abs(c.survival[0] - expected) <= 3.0 * c.std_error[0] + 0.06);
}

TEST_CASE("coupling inputs are validated") {
  const auto sol = FlowSolution::constant(16, 0.0, 1.0);
  CHECK_THROWS(coupling_survival(sol, 0.01, {0.1, 0.1}, {0.1, 0.1}, 10, 1e-4, 1, {0.005}));
  CHECK_THROWS(coupling_survival(sol, 0.01, {0.1, 0.1}, {0.2, 0.1}, 10, 1e-4, 1, {0.02}));
  CHECK_THROWS(distance_drift_check(sol, 0.5, 0.4, 100, 1e-6, 1));
}
