#include "rflab/barriers.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace rflab {

namespace {

void check_sign(int r) {
  if (r < -1 || r > 1) throw std::invalid_argument("curvature sign must be -1, 0 or +1");
}

double half_log(double arg) {
  if (!(arg > 0.0)) throw std::domain_error("barrier escaped to -infinity");
  return 0.5 * std::log(arg);
}

}  // namespace

double barrier_value(const BarrierParams &params, double tau) {
  check_sign(params.r);
  if (params.r != 0 && !(params.c < 1.0)) throw std::invalid_argument("barrier constant must be < 1");
  switch (params.r) {
    case 1:
      return half_log(1.0 - params.c * std::exp(-2.0 * tau));
    case -1:
      return half_log(1.0 - params.c * std::exp(2.0 * tau));
    default:
      return params.c;
  }
}

double barrier_drift(int r, double q) {
  check_sign(r);
  if (r == 1) return std::exp(-2.0 * q) - 1.0;
  if (r == -1) return 1.0 - std::exp(-2.0 * q);
  return 0.0;
}

double calibrate_barrier(int r, double target, double t) {
  check_sign(r);
  if (r == 1) return std::exp(2.0 * t) * (1.0 - std::exp(2.0 * target));
  if (r == -1) return std::exp(-2.0 * t) * (1.0 - std::exp(2.0 * target));
  return target;
}

double positive_lower_bound_horizon(double beta) {
  if (beta == 0.0) return std::numeric_limits<double>::infinity();
  return -0.5 * std::log(1.0 - std::exp(2.0 * beta));
}

BoundPair reachable_bounds(int r, double alpha, double beta, double t) {
  check_sign(r);
  if (alpha < 0.0 || beta > 0.0) throw std::invalid_argument("area normalization violated");
  BoundPair b;
  if (r == 0) {
    b.upper = Bound::finite(alpha);
    b.lower = Bound::finite(beta);
    return b;
  }
  const double grow = r == 1 ? std::exp(2.0 * t) : std::exp(-2.0 * t);
  b.upper = Bound::finite(half_log(1.0 - grow * (1.0 - std::exp(2.0 * alpha))));
  if (r == 1 && !(t < positive_lower_bound_horizon(beta))) {
    b.lower = Bound::none();
  } else {
    b.lower = Bound::finite(half_log(1.0 - grow * (1.0 - std::exp(2.0 * beta))));
  }
  return b;
}

BoundPair unnormalized_bounds(int r, double alpha, double beta, double t) {
  if (r != 1 && r != -1) throw std::invalid_argument("unnormalized bounds need r = -1 or +1");
  BoundPair b;
  if (r == -1) {
    b.upper = Bound::finite(0.5 * std::log(std::exp(2.0 * alpha) + t));
    b.lower = Bound::finite(0.5 * std::log(std::exp(2.0 * beta) + t));
    return b;
  }
  const double ea = std::exp(2.0 * alpha), eb = std::exp(2.0 * beta);
  b.upper = t < ea ? Bound::finite(0.5 * std::log(ea - t)) : Bound::blown_up();
  b.lower = t < eb ? Bound::finite(0.5 * std::log(eb - t)) : Bound::blown_up();
  return b;
}

double blowup_time_positive_curvature(double p0_sup, double K0) {
  if (!(K0 > 0.0)) throw std::invalid_argument("curvature lower bound must be positive");
  return std::exp(2.0 * p0_sup) / (2.0 * K0);
}

double negative_curvature_lower_bound(double K0, double t) {
  if (!(K0 > 0.0) || !(t > 0.0)) throw std::invalid_argument("K0 and t must be positive");
  return 0.5 * std::log(2.0 * K0 * t);
}

}  // namespace rflab
