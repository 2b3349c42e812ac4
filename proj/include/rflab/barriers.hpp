#pragma once

namespace rflab {

/// Barrier curve B^r_c with curvature sign r in {-1, 0, +1}; c < 1 when r != 0.
struct BarrierParams {
  int r = 0;
  double c = 0.0;
};

/// Closed-form barrier curve at time tau.
double barrier_value(const BarrierParams &params, double tau);

/// Drift U(q) of the barrier ODE B' = U(B).
double barrier_drift(int r, double q);

/// Constant c for which the barrier with sign r passes through `target` at time t.
double calibrate_barrier(int r, double target, double t);

/// Outcome of a bound evaluation: either a finite value or a sentinel.
struct Bound {
  enum class Kind { finite, none, blown_up };
  Kind kind = Kind::finite;
  double value = 0.0;

  static Bound finite(double v) { return {Kind::finite, v}; }
  static Bound none() { return {Kind::none, 0.0}; }
  static Bound blown_up() { return {Kind::blown_up, 0.0}; }
  bool is_finite() const { return kind == Kind::finite; }
};

struct BoundPair {
  Bound upper;
  Bound lower;
};

/// A-priori bounds on the normalized flow started from data with max alpha >= 0 >= beta = min.
/// For r = +1 the lower bound is available only before -1/2 log(1 - e^{2 beta}).
BoundPair reachable_bounds(int r, double alpha, double beta, double t);

/// Time after which the r = +1 lower bound is no longer available (infinite for beta = 0).
double positive_lower_bound_horizon(double beta);

/// Bounds for the unnormalized flow with r in {-1, +1}; blown_up past the r = +1 thresholds.
BoundPair unnormalized_bounds(int r, double alpha, double beta, double t);

/// Upper bound e^{2 p0_sup} / (2 K0) on the extinction time for positive curvature.
double blowup_time_positive_curvature(double p0_sup, double K0);

/// Lower bound 1/2 log(2 K0 t) on the exponent for negative curvature.
double negative_curvature_lower_bound(double K0, double t);

}  // namespace rflab
