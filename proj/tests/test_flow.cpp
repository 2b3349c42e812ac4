#include <cmath>
#include <filesystem>
#include <numbers>
#include <stdexcept>

#include "doctest.h"
#include "rflab/flow.hpp"
#include "rflab/rng.hpp"

using namespace rflab;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

GridField random_smooth(std::size_t n, std::uint64_t seed, double amp) {
  RngStream rng(seed, 0);
  double c[3][3], ph[3][3];
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) {
      c[a][b] = amp * (2.0 * rng.uniform() - 1.0);
      ph[a][b] = kTwoPi * rng.uniform();
    }
  return GridField::sample(n, [&](double x, double y) {
    double s = 0.0;
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) s += c[a][b] * std::cos(kTwoPi * (a * x + b * y) + ph[a][b]);
    return s;
  });
}

}  // namespace

TEST_CASE("grid size must be a power of two") {
  CHECK_THROWS_WITH(GridField(12), "grid size must be a power of two no smaller than 8");
  CHECK_THROWS(GridField(4));
  CHECK_NOTHROW(GridField(16));
}

TEST_CASE("periodic indexing wraps in both directions") {
  GridField f = GridField::sample(8, [](double x, double y) { return 10 * x + y; });
  CHECK(f.at(-1, 0) == f(7, 0));
  CHECK(f.at(8, 9) == f(0, 1));
}

TEST_CASE("five-point Laplacian has the exact discrete eigenvalue on Fourier modes") {
  for (std::size_t n : {8u, 32u, 64u}) {
    for (int k : {1, 2, 3}) {
      const GridField f = GridField::sample(n, [&](double x, double y) {
        return std::cos(kTwoPi * k * x) * std::cos(kTwoPi * y);
      });
      const double h = f.h();
      const double lam = -(2.0 / (h * h)) * (2.0 - std::cos(kTwoPi * k * h) - std::cos(kTwoPi * h));
      const GridField lap = laplacian(f);
      for (std::size_t i = 0; i < f.values().size(); ++i)
        CHECK(std::abs(lap.values()[i] - lam * f.values()[i]) <= 1e-9 * std::abs(lam));
    }
  }
}

TEST_CASE("right-hand side is defined for the flat reference only") {
  const GridField f(16);
  CHECK_THROWS_WITH(rhs(f, 1), "field evolution implemented for flat reference only");
  CHECK_THROWS(rhs(f, -1));
  CHECK(rhs(f, 0).sup_abs() == 0.0);
}

TEST_CASE("area normalization yields unit area") {
  const GridField p = normalize_area(random_smooth(32, 1, 0.3));
  CHECK(area(p) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(area(GridField(16, 2.0)) == doctest::Approx(4.0));
}

TEST_CASE("Euler steps conserve the area and obey the maximum principle") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    GridField p = normalize_area(random_smooth(32, seed, 0.15));
    const double a0 = area(p);
    double mx = p.max(), mn = p.min();
    const double dt = cfl_limit(p);
    for (int k = 0; k < 500; ++k) {
      euler_step(p, dt);
      CHECK(area(p) == doctest::Approx(a0).epsilon(1e-12));
      CHECK(p.max() <= mx + 1e-14);
      CHECK(p.min() >= mn - 1e-14);
      mx = p.max();
      mn = p.min();
    }
  }
}

TEST_CASE("solve validates its inputs") {
  const GridField p0 = normalize_area(random_smooth(16, 2, 0.1));
  CHECK_THROWS_WITH(solve(p0, 0.01, 2.0 * cfl_limit(p0), 0.005), "dt exceeds CFL bound");
  GridField shifted = p0;
  for (double &v : shifted.values()) v += 0.1;
  CHECK_THROWS_WITH(solve(shifted, 0.01, 1e-5, 0.005), "initial data not area-normalized");
  CHECK_THROWS_WITH(solve(p0, 0.0125, 1e-5, 0.005), "horizon must be a multiple of the save interval");
}

TEST_CASE("solve saves snapshots on the requested grid") {
  const GridField p0 = normalize_area(random_smooth(16, 3, 0.1));
  const FlowSolution sol = solve(p0, 0.02, cfl_limit(p0), 0.005);
  REQUIRE(sol.times().size() == 5);
  CHECK(sol.times().back() == doctest::Approx(0.02));
  CHECK(sol.snapshot_index(0.01) == 2);
  CHECK_THROWS_WITH(sol.snapshot(0.0123), "time is not a saved snapshot");
  CHECK_THROWS_AS(sol.value(0.03, {0.1, 0.1}), std::out_of_range);
  CHECK(sol.dt_solver() <= cfl_limit(p0));
}

TEST_CASE("small Fourier mode decays by the explicit Euler amplification factor") {
  const std::size_t n = 32;
  const GridField p0 = normalize_area(GridField::sample(n, [](double x, double) { return 1e-4 * std::sin(kTwoPi * x); }));
  const FlowSolution sol = solve(p0, 0.05, cfl_limit(p0), 0.05);
  const double h = 1.0 / n;
  const double lam = (2.0 / (h * h)) * (1.0 - std::cos(kTwoPi * h));
  const double dt = sol.dt_solver();
  const double steps = std::round(0.05 / dt);
  const double ratio = sol.fields().back().sup_abs() / sol.fields().front().sup_abs();
  CHECK(ratio == doctest::Approx(std::pow(1.0 - lam * dt, steps)).epsilon(1e-3));
}

TEST_CASE("spline interpolation reproduces nodes and smooth derivatives") {
  const std::size_t n = 64;
  const double amp = 0.1;
  auto f = [&](double x, double y) { return amp * std::sin(kTwoPi * x) * std::cos(kTwoPi * y); };
  const GridField g = GridField::sample(n, f);
  const FlowSolution sol({0.0}, {g}, 1e-5);
  CHECK(sol.value(0.0, {5.0 / n, 9.0 / n}) == doctest::Approx(f(5.0 / n, 9.0 / n)).epsilon(1e-13));
  RngStream rng(9, 0);
  for (int k = 0; k < 200; ++k) {
    const double x = rng.uniform(), y = rng.uniform();
    const Jet j = sol.jet(0.0, {x, y});
    const double s1 = std::sin(kTwoPi * x), c1 = std::cos(kTwoPi * x);
    const double s2 = std::sin(kTwoPi * y), c2 = std::cos(kTwoPi * y);
    const double w = kTwoPi * amp;
    CHECK(std::abs(j.p - (amp * s1 * c2)) <= 1e-6 * amp);
    CHECK(std::abs(j.grad.v1 - (w * c1 * c2)) <= 1e-4 * w);
    CHECK(std::abs(j.grad.v2 - (-w * s1 * s2)) <= 1e-4 * w);
    const double w2 = kTwoPi * kTwoPi * amp;
    CHECK(std::abs(j.hess.h11 - (-w2 * s1 * c2)) <= 5e-3 * w2);
    CHECK(std::abs(j.hess.h12 - (-w2 * c1 * s2)) <= 5e-3 * w2);
    CHECK(std::abs(j.hess.h22 - (-w2 * s1 * c2)) <= 5e-3 * w2);
  }
}

TEST_CASE("interpolation is linear in time between snapshots") {
  const GridField a(16, 1.0, 0.0), b(16, 1.0, 1.0);
  const FlowSolution sol({0.0, 1.0}, {a, b}, 1e-3);
  CHECK(sol.value(0.25, {0.3, 0.7}) == doctest::Approx(0.25));
}

TEST_CASE("second difference quotient matches the Hessian of a quadratic-like field") {
  const std::size_t n = 64;
  const GridField g = GridField::sample(n, [](double x, double) { return 0.05 * std::cos(kTwoPi * x); });
  const FlowSolution sol({0.0}, {g}, 1e-5);
  const double q = second_difference_quotient(sol, 0.0, {0.0, 0.3}, {1.0, 0.0}, 1e-3);
  CHECK(q == doctest::Approx(-0.05 * kTwoPi * kTwoPi).epsilon(2e-3));
  CHECK_THROWS(second_difference_quotient(sol, 0.0, {0.0, 0.3}, {1.0, 0.0}, 0.3));
}

TEST_CASE("sup norms of a single mode") {
  const GridField g = GridField::sample(64, [](double x, double) { return 0.2 * std::sin(kTwoPi * x); });
  const SupNorms s = sup_norms(g);
  CHECK(s.p_inf == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(s.grad_inf == doctest::Approx(0.2 * kTwoPi).epsilon(2e-3));
  CHECK(s.hess_inf == doctest::Approx(0.2 * kTwoPi * kTwoPi).epsilon(2e-3));
  CHECK(oscillation(g) == doctest::Approx(0.4).epsilon(1e-12));
}

TEST_CASE("grid CSV and flow directories round trip") {
  const auto dir = std::filesystem::temp_directory_path() / "rflab_flow_roundtrip";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  const GridField p0 = normalize_area(random_smooth(16, 4, 0.1));
  write_grid_csv(p0, 0.5, (dir / "p0.csv").string());
  double t = 0.0;
  const GridField back = read_grid_csv((dir / "p0.csv").string(), &t);
  CHECK(t == 0.5);
  for (std::size_t i = 0; i < p0.values().size(); ++i) CHECK(back.values()[i] == p0.values()[i]);

  const FlowSolution sol = solve(p0, 0.01, cfl_limit(p0), 0.005);
  sol.save((dir / "flow").string());
  const FlowSolution loaded = FlowSolution::load((dir / "flow").string());
  REQUIRE(loaded.times().size() == sol.times().size());
  CHECK(loaded.dt_solver() == sol.dt_solver());
  CHECK(loaded.value(0.0073, {0.21, 0.64}) == sol.value(0.0073, {0.21, 0.64}));
  std::filesystem::remove_all(dir);
}
