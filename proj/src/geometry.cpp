#include "rflab/geometry.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace rflab {

double norm(const TangentVec &v) { return std::hypot(v.v1, v.v2); }

namespace {

double reduce(double v, double L) {
  double r = std::fmod(v, L);
  if (r < 0.0) r += L;
  // fmod of a tiny negative number can round back up to exactly L.
  if (r >= L) r = 0.0;
  return r;
}

}  // namespace

TorusPoint wrap(double raw1, double raw2, double L) {
  if (!std::isfinite(raw1) || !std::isfinite(raw2)) {
    throw std::invalid_argument("non-finite coordinate");
  }
  if (!(L > 0.0)) throw std::invalid_argument("torus side must be positive");
  return {reduce(raw1, L), reduce(raw2, L)};
}

GeodesicData torus_geodesic_enumerated(const TorusPoint &x, const TorusPoint &y, int radius,
                                       double L) {
  double best = std::numeric_limits<double>::infinity();
  double d1 = 0.0, d2 = 0.0;
  std::array<int, 2> idx{0, 0};
  // First pass finds the minimum; the loop order is lexicographic in (i, j), so a strict
  // comparison keeps the smallest index among exact ties.
  for (int i = -radius; i <= radius; ++i) {
    for (int j = -radius; j <= radius; ++j) {
      const double e1 = y.x1 + i * L - x.x1;
      const double e2 = y.x2 + j * L - x.x2;
      const double d = std::hypot(e1, e2);
      if (d < best - kMultiplicityTol) {
        best = d;
        d1 = e1;
        d2 = e2;
        idx = {i, j};
      }
    }
  }
  int mult = 0;
  for (int i = -radius; i <= radius; ++i) {
    for (int j = -radius; j <= radius; ++j) {
      const double d = std::hypot(y.x1 + i * L - x.x1, y.x2 + j * L - x.x2);
      if (std::abs(d - best) <= kMultiplicityTol) ++mult;
    }
  }
  GeodesicData g;
  g.distance = best;
  g.multiplicity = mult;
  g.translate = idx;
  if (best > 0.0) {
    g.direction = {d1 / best, d2 / best};
  }
  return g;
}

GeodesicData torus_geodesic(const TorusPoint &x, const TorusPoint &y, double L) {
  // For canonical points each displacement component lies in (-L, L), so the nearest
  // translate is found componentwise. Near half a period ties are possible and the full
  // enumeration decides multiplicity and tie-breaking.
  double e1 = y.x1 - x.x1, e2 = y.x2 - x.x2;
  int i = 0, j = 0;
  if (e1 > 0.5 * L) { e1 -= L; i = -1; } else if (e1 < -0.5 * L) { e1 += L; i = 1; }
  if (e2 > 0.5 * L) { e2 -= L; j = -1; } else if (e2 < -0.5 * L) { e2 += L; j = 1; }
  const double margin = 0.5 * L - 1e-9;
  if (std::abs(e1) >= margin || std::abs(e2) >= margin) {
    return torus_geodesic_enumerated(x, y, 1, L);
  }
  GeodesicData g;
  g.distance = std::hypot(e1, e2);
  g.translate = {i, j};
  if (g.distance > 0.0) g.direction = {e1 / g.distance, e2 / g.distance};
  return g;
}

TangentVec mirror_map(const TorusPoint &x, const TorusPoint &y, const TangentVec &v, double L) {
  const GeodesicData g = torus_geodesic(x, y, L);
  if (g.distance == 0.0) throw std::invalid_argument("mirror map undefined on diagonal");
  return reflect(v, g.direction);
}

TorusPoint geodesic_point(const TorusPoint &x, const TorusPoint &y, double s, double L) {
  const GeodesicData g = torus_geodesic(x, y, L);
  if (s < 0.0 || s > g.distance) throw std::invalid_argument("arclength out of range");
  if (s == g.distance) return y;
  return wrap(x.x1 + s * g.direction.v1, x.x2 + s * g.direction.v2, L);
}

TorusPoint offset_point(const TorusPoint &z, const TangentVec &xi, double s, double L) {
  return wrap(z.x1 + s * xi.v1, z.x2 + s * xi.v2, L);
}

}  // namespace rflab
