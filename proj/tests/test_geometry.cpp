#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "doctest.h"
#include "rflab/geometry.hpp"
#include "rflab/rng.hpp"

using namespace rflab;

TEST_CASE("wrap reduces coordinates into the fundamental domain") {
  const TorusPoint p = wrap(1.25, -0.25);
  CHECK(p.x1 == doctest::Approx(0.25));
  CHECK(p.x2 == doctest::Approx(0.75));
  const TorusPoint q = wrap(-3.0, 7.5, 2.0);
  CHECK(q.x1 == doctest::Approx(1.0));
  CHECK(q.x2 == doctest::Approx(1.5));
  CHECK_THROWS_WITH(wrap(std::numeric_limits<double>::quiet_NaN(), 0.0), "non-finite coordinate");
}

TEST_CASE("wrapped coordinates always lie in [0, L)") {
  RngStream rng(3, 0);
  for (int k = 0; k < 2000; ++k) {
    const double a = 40.0 * (rng.uniform() - 0.5), b = 40.0 * (rng.uniform() - 0.5);
    const TorusPoint p = wrap(a, b);
    CHECK(p.x1 >= 0.0);
    CHECK(p.x1 < 1.0);
    CHECK(p.x2 >= 0.0);
    CHECK(p.x2 < 1.0);
  }
}

TEST_CASE("geodesic between nearby points is the straight segment") {
  const GeodesicData g = torus_geodesic({0.1, 0.2}, {0.4, 0.6});
  CHECK(g.distance == doctest::Approx(0.5));
  CHECK(g.direction.v1 == doctest::Approx(0.6));
  CHECK(g.direction.v2 == doctest::Approx(0.8));
  CHECK(g.multiplicity == 1);
}

TEST_CASE("geodesic wraps across the boundary") {
  const GeodesicData g = torus_geodesic({0.95, 0.5}, {0.05, 0.5});
  CHECK(g.distance == doctest::Approx(0.1));
  CHECK(g.direction.v1 == doctest::Approx(1.0));
  CHECK(g.translate[0] == 1);
}

TEST_CASE("cut locus points report their multiplicity") {
  CHECK(torus_geodesic({0.0, 0.0}, {0.5, 0.0}).multiplicity == 2);
  CHECK(torus_geodesic({0.0, 0.0}, {0.5, 0.5}).multiplicity == 4);
  CHECK(torus_geodesic({0.2, 0.3}, {0.7, 0.3}).multiplicity == 2);
  const GeodesicData g = torus_geodesic({0.0, 0.0}, {0.5, 0.5});
  CHECK(g.distance == doctest::Approx(std::sqrt(0.5)));
  // Ties resolve to the lexicographically smallest translate.
  CHECK(g.translate[0] == -1);
  CHECK(g.translate[1] == -1);
}

TEST_CASE("fast geodesic agrees with full enumeration") {
  RngStream rng(11, 0);
  for (int k = 0; k < 5000; ++k) {
    const TorusPoint x{rng.uniform(), rng.uniform()}, y{rng.uniform(), rng.uniform()};
    const GeodesicData fast = torus_geodesic(x, y);
    const GeodesicData full = torus_geodesic_enumerated(x, y, 2);
    CHECK(fast.distance == doctest::Approx(full.distance).epsilon(1e-14));
    CHECK(fast.translate == full.translate);
    CHECK(fast.multiplicity == full.multiplicity);
  }
}

TEST_CASE("geodesic distance is a symmetric metric bounded by the half diagonal") {
  RngStream rng(12, 0);
  for (int k = 0; k < 2000; ++k) {
    const TorusPoint x{rng.uniform(), rng.uniform()}, y{rng.uniform(), rng.uniform()},
        z{rng.uniform(), rng.uniform()};
    const double dxy = torus_geodesic(x, y).distance;
    CHECK(dxy == doctest::Approx(torus_geodesic(y, x).distance).epsilon(1e-14));
    CHECK(dxy <= std::sqrt(0.5) + 1e-15);
    CHECK(dxy <= torus_geodesic(x, z).distance + torus_geodesic(z, y).distance + 1e-14);
  }
}

TEST_CASE("reflection is an isometric involution") {
  RngStream rng(13, 0);
  for (int k = 0; k < 1000; ++k) {
    const double th = 6.283185307179586 * rng.uniform();
    const TangentVec u{std::cos(th), std::sin(th)};
    const TangentVec v{rng.normal(), rng.normal()};
    const TangentVec rv = reflect(v, u);
    const TangentVec back = reflect(rv, u);
    CHECK(norm(rv) == doctest::Approx(norm(v)));
    CHECK(back.v1 == doctest::Approx(v.v1));
    CHECK(back.v2 == doctest::Approx(v.v2));
    CHECK(dot(rv, u) == doctest::Approx(-dot(v, u)));
  }
}

TEST_CASE("mirror map reflects across the perpendicular bisector") {
  const TangentVec m = mirror_map({0.1, 0.1}, {0.3, 0.1}, {1.0, 2.0});
  CHECK(m.v1 == doctest::Approx(-1.0));
  CHECK(m.v2 == doctest::Approx(2.0));
  CHECK_THROWS_WITH(mirror_map({0.2, 0.2}, {0.2, 0.2}, {1.0, 0.0}),
                    "mirror map undefined on diagonal");
}

TEST_CASE("geodesic points interpolate between the endpoints") {
  const TorusPoint x{0.9, 0.1}, y{0.1, 0.1};
  const TorusPoint mid = geodesic_point(x, y, 0.1);
  CHECK(std::min(mid.x1, 1.0 - mid.x1) < 1e-12);
  CHECK(mid.x2 == doctest::Approx(0.1));
  const TorusPoint end = geodesic_point(x, y, torus_geodesic(x, y).distance);
  CHECK(end.x1 == y.x1);
  CHECK(end.x2 == y.x2);
  const TorusPoint start = geodesic_point(x, y, 0.0);
  CHECK(start.x1 == doctest::Approx(x.x1));
  CHECK_THROWS_WITH(geodesic_point(x, y, 0.3), "arclength out of range");
}

TEST_CASE("offset point moves along a unit direction") {
  const TorusPoint p = offset_point({0.95, 0.5}, {0.6, 0.8}, 0.25);
  CHECK(p.x1 == doctest::Approx(0.1));
  CHECK(p.x2 == doctest::Approx(0.7));
}
