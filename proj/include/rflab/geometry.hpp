#pragma once

#include <array>

namespace rflab {

/// Point of the square flat torus R^2 / (L Z)^2 in canonical coordinates [0, L).
struct TorusPoint {
  double x1 = 0.0;
  double x2 = 0.0;
};

/// Euclidean tangent vector; the reference metric is flat so no frame is needed.
struct TangentVec {
  double v1 = 0.0;
  double v2 = 0.0;
};

inline double dot(const TangentVec &a, const TangentVec &b) { return a.v1 * b.v1 + a.v2 * b.v2; }
double norm(const TangentVec &v);

/// Minimal geodesic between two torus points.
struct GeodesicData {
  double distance = 0.0;
  TangentVec direction{1.0, 0.0};  // unit, from x toward y
  int multiplicity = 1;            // number of minimizing lattice translates
  std::array<int, 2> translate{0, 0};
};

constexpr double kMultiplicityTol = 1e-12;

/// Reduces raw coordinates modulo L into [0, L). Throws on non-finite input.
TorusPoint wrap(double raw1, double raw2, double L = 1.0);

/// Minimal geodesic from x to y using the 9 nearest lattice translates of y.
/// Ties are broken by the lexicographically smallest translate index (i, j).
GeodesicData torus_geodesic(const TorusPoint &x, const TorusPoint &y, double L = 1.0);

/// Same as torus_geodesic but enumerating translates with |i|,|j| <= radius (test oracle).
GeodesicData torus_geodesic_enumerated(const TorusPoint &x, const TorusPoint &y, int radius,
                                       double L = 1.0);

/// Reflection of v across the line orthogonal to the unit direction u.
inline TangentVec reflect(const TangentVec &v, const TangentVec &u) {
  const double s = 2.0 * dot(v, u);
  return {v.v1 - s * u.v1, v.v2 - s * u.v2};
}

/// Mirror map: flat parallel transport from x to y followed by reflection in the geodesic
/// direction. Throws when x == y.
TangentVec mirror_map(const TorusPoint &x, const TorusPoint &y, const TangentVec &v,
                      double L = 1.0);

/// Point at arclength s along the minimal geodesic from x to y.
TorusPoint geodesic_point(const TorusPoint &x, const TorusPoint &y, double s, double L = 1.0);

/// Point reached from z by moving s along the (not necessarily minimal) straight line xi.
TorusPoint offset_point(const TorusPoint &z, const TangentVec &xi, double s, double L = 1.0);

}  // namespace rflab
