#include <cmath>
#include <numbers>
#include <stdexcept>

#include "doctest.h"
#include "rflab/analysis.hpp"
#include "rflab/target.hpp"

using namespace rflab;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

FlowSolution small_flow() {
  const GridField p0 = normalize_area(
      GridField::sample(32, [](double x, double y) { return 0.1 * std::sin(kTwoPi * x) * std::cos(kTwoPi * y); }));
  return solve(p0, 0.02, cfl_limit(p0), 0.002);
}

}  // namespace

TEST_CASE("controlled simulation validates its step") {
  const auto sol = FlowSolution::constant(16, 0.0, 1.0);
  RngStream rng(1, 0);
  CHECK_THROWS_WITH(simulate_controlled(&sol, 0.1, {0.1, 0.1}, zero_control(), 2e-3, rng),
                    "dt must lie in (0, 1e-3]");
  CHECK_THROWS(simulate_controlled(&sol, 0.0, {0.1, 0.1}, zero_control(), 1e-4, rng));
}

TEST_CASE("the step is shortened so the horizon is hit exactly") {
  const auto sol = FlowSolution::constant(16, 0.0, 1.0);
  RngStream rng(1, 0);
  const ControlledPath path = simulate_controlled(&sol, 0.01, {0.1, 0.1}, zero_control(), 3e-4, rng);
  CHECK(path.dt == doctest::Approx(0.01 / 34));
  CHECK(path.terminal_tau == doctest::Approx(0.01));
}

TEST_CASE("zero flow keeps the controlled exponent on the section") {
  const auto sol = FlowSolution::constant(16, 0.0, 1.0);
  RngStream rng(2, 0);
  const ControlledPath path =
      simulate_controlled(&sol, 0.5, {0.3, 0.7}, successful_control(sol, 0.5), 1e-3, rng);
  CHECK(path.terminal_p == 0.0);
  CHECK(path.on_section_max_dev == 0.0);
  CHECK(path.clamp_count == 0);
}

TEST_CASE("uncontrolled particle diffuses with speed sqrt2 e^{-p}") {
  const double t = 0.01, p0 = 0.3;
  std::vector<double> sq(4000);
  for (std::size_t i = 0; i < sq.size(); ++i) {
    RngStream rng(3, i);
    SimulationOptions opt;
    opt.p0 = p0;
    const ControlledPath path = simulate_controlled(nullptr, t, {0.5, 0.5}, zero_control(), 1e-4, rng, opt);
    const double d = torus_geodesic({0.5, 0.5}, path.terminal_x).distance;
    sq[i] = d * d;
    CHECK(path.terminal_p == p0);
  }
  const MCEstimate e = mc_reduce(sq);
  const double expected = 2.0 * 2.0 * std::exp(-2.0 * p0) * t;
  CHECK(std::abs(e.mean - expected) <= 4.0 * e.std_error);
}

TEST_CASE("simulation is reproducible from its stream key") {
  const FlowSolution sol = small_flow();
  const Control c = successful_control(sol, 0.02);
  RngStream a(5, 17), b(5, 17), other(5, 18);
  const ControlledPath pa = simulate_controlled(&sol, 0.02, {0.2, 0.4}, c, 1e-4, a);
  const ControlledPath pb = simulate_controlled(&sol, 0.02, {0.2, 0.4}, c, 1e-4, b);
  const ControlledPath po = simulate_controlled(&sol, 0.02, {0.2, 0.4}, c, 1e-4, other);
  CHECK(pa.terminal_p == pb.terminal_p);
  CHECK(pa.terminal_x.x1 == pb.terminal_x.x1);
  CHECK(pa.terminal_p != po.terminal_p);
}

TEST_CASE("recording stride and early stop") {
  const auto sol = FlowSolution::constant(16, 0.0, 1.0);
  RngStream rng(6, 0);
  SimulationOptions opt;
  opt.record_stride = 10;
  opt.stop_at = 0.005;
  const ControlledPath path = simulate_controlled(&sol, 0.01, {0.1, 0.1}, zero_control(), 1e-4, rng, opt);
  CHECK(path.terminal_tau == doctest::Approx(0.005));
  CHECK(path.samples.size() == 6);
  CHECK(path.samples.front().tau == 0.0);
}

TEST_CASE("successful control refuses horizons beyond the solution") {
  const FlowSolution sol = small_flow();
  CHECK_THROWS_WITH(successful_control(sol, 0.5), "solution does not cover horizon");
}

TEST_CASE("representation estimate matches the flow on a short horizon") {
  const FlowSolution sol = small_flow();
  const TorusPoint x0{0.2, 0.1};
  const MCEstimate e = representation_estimate(sol, 0.02, x0, 2000, 2e-4, 99);
  CHECK(std::abs(e.mean - sol.value(0.02, x0)) <= std::max(4.0 * e.std_error, 2e-3));
  const MCEstimate again = representation_estimate(sol, 0.02, x0, 2000, 2e-4, 99);
  CHECK(again.mean == e.mean);
}

TEST_CASE("martingale checkpoints rejected outside the horizon") {
  const FlowSolution sol = small_flow();
  CHECK_THROWS(martingale_test(sol, 0.02, {0.1, 0.1}, {0.03}, 10, 1e-4, 1));
}

TEST_CASE("generator of elementary test functions") {
  const TorusPoint x{0.1, 0.2};
  const double p = 0.25;
  const TangentVec a{0.3, -0.4};
  const double e = std::exp(-2.0 * p);
  TestFunction zero;
  zero.value = [](double, const TorusPoint &, double) { return 0.0; };
  zero.d_tau = zero.value;
  zero.d_pp = zero.value;
  zero.hess_x = [](double, const TorusPoint &, double) { return Sym2{}; };
  zero.d_xp = [](double, const TorusPoint &, double) { return TangentVec{}; };

  TestFunction sine = zero;
  sine.hess_x = [](double, const TorusPoint &z, double) {
    return Sym2{-kTwoPi * kTwoPi * std::sin(kTwoPi * z.x1), 0.0, 0.0};
  };
  CHECK(generator(sine, 0.0, x, p, a) == doctest::Approx(-e * kTwoPi * kTwoPi * std::sin(kTwoPi * 0.1)));

  TestFunction square = zero;
  square.d_pp = [](double, const TorusPoint &, double) { return 2.0; };
  CHECK(generator(square, 0.0, x, p, a) == doctest::Approx(2.0 * e * 0.25));

  TestFunction mixed = zero;
  mixed.d_xp = [](double, const TorusPoint &, double) { return TangentVec{1.0, 0.0}; };
  mixed.d_tau = [](double, const TorusPoint &, double) { return 0.5; };
  CHECK(generator(mixed, 0.0, x, p, a) == doctest::Approx(0.5 + 2.0 * e * 0.3));
}

TEST_CASE("empirical one-step drift agrees with the generator") {
  const FlowSolution sol = small_flow();
  TestFunction phi;
  phi.value = [](double, const TorusPoint &z, double q) { return q * q + std::sin(kTwoPi * z.x1) * q; };
  phi.d_tau = [](double, const TorusPoint &, double) { return 0.0; };
  phi.hess_x = [](double, const TorusPoint &z, double q) {
    return Sym2{-kTwoPi * kTwoPi * std::sin(kTwoPi * z.x1) * q, 0.0, 0.0};
  };
  phi.d_pp = [](double, const TorusPoint &, double) { return 2.0; };
  phi.d_xp = [](double, const TorusPoint &z, double) { return TangentVec{kTwoPi * std::cos(kTwoPi * z.x1), 0.0}; };
  const std::vector<PathSample> points{{0.0, {0.1, 0.2}, 0.05}, {0.01, {0.6, 0.3}, -0.04}};
  const GeneratorResidual r = generator_residual(sol, 0.02, phi, points, 1e-4, 20000, 4);
  CHECK(r.max_gap_in_se < 4.0);
}
