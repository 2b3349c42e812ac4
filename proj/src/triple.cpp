#include "rflab/triple.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "rflab/coupling.hpp"
#include "rflab/parallel.hpp"

namespace rflab {

void validate(const JacobiSpec &spec) {
  if (spec.r < -1 || spec.r > 1) throw std::invalid_argument("curvature sign must be -1, 0 or +1");
  if (!(spec.l > 0.0)) throw std::invalid_argument("geodesic length must be positive");
  if (spec.r == 1 && !(spec.l < std::numbers::pi)) {
    throw std::invalid_argument("positive curvature needs l < pi");
  }
}

namespace {

void check_arclength(const JacobiSpec &spec, double s) {
  validate(spec);
  if (s < 0.0 || s > spec.l) throw std::invalid_argument("arclength out of range");
}

// Dirichlet basis building block: sinh, identity or sin.
double basis_s(int r, double s) {
  if (r == -1) return std::sinh(s);
  if (r == 1) return std::sin(s);
  return s;
}
double basis_c(int r, double s) {
  if (r == -1) return std::cosh(s);
  if (r == 1) return std::cos(s);
  return 1.0;
}

}  // namespace

double jacobi_w(const JacobiSpec &spec, double s) {
  check_arclength(spec, s);
  const double u = 0.5 * (spec.l - 2.0 * s);
  if (spec.r == -1) return std::cosh(u) / std::cosh(0.5 * spec.l);
  if (spec.r == 1) return std::cos(u) / std::cos(0.5 * spec.l);
  return 1.0;
}

double jacobi_w_prime(const JacobiSpec &spec, double s) {
  check_arclength(spec, s);
  const double u = 0.5 * (spec.l - 2.0 * s);
  if (spec.r == -1) return -std::sinh(u) / std::cosh(0.5 * spec.l);
  if (spec.r == 1) return std::sin(u) / std::cos(0.5 * spec.l);
  return 0.0;
}

double jacobi_w2_integral(const JacobiSpec &spec, double x) {
  check_arclength(spec, x);
  if (spec.r == 0) return x;
  // With u = (l - 2s) / 2 the integral becomes F(l/2) - F((l - 2x)/2) where F is an
  // antiderivative of cosh^2 or cos^2.
  auto F = [&](double u) {
    return spec.r == -1 ? 0.5 * u + 0.25 * std::sinh(2.0 * u) : 0.5 * u + 0.25 * std::sin(2.0 * u);
  };
  const double c = spec.r == -1 ? std::cosh(0.5 * spec.l) : std::cos(0.5 * spec.l);
  return (F(0.5 * spec.l) - F(0.5 * (spec.l - 2.0 * x))) / (c * c);
}

double beta_drift(const JacobiSpec &spec, double a, double rho1) {
  return 0.5 * a * a *
         (jacobi_w(spec, rho1) * jacobi_w_prime(spec, rho1) - jacobi_w_prime(spec, 0.0));
}

double theta_drift(const JacobiSpec &spec, double a, double rho1) {
  const double frac = rho1 / spec.l;
  const double curvature_term =
      spec.r == 0 ? 0.0
                  : spec.r * (jacobi_w2_integral(spec, rho1) - frac * jacobi_w2_integral(spec, spec.l));
  return beta_drift(spec, a, rho1) + a * a * (frac * jacobi_w_prime(spec, 0.0) + curvature_term);
}

double index_form_beta(const JacobiSpec &spec, double a, double b, double rho1) {
  check_arclength(spec, rho1);
  const int r = spec.r;
  const double l = spec.l;
  const double S = basis_s(r, l);
  auto integrand = [&](double s) {
    const double J = (a * basis_s(r, l - s) + b * basis_s(r, s)) / S;
    const double dJ = (-a * basis_c(r, l - s) + b * basis_c(r, s)) / S;
    return dJ * dJ - r * J * J;
  };
  if (rho1 == 0.0) return 0.0;
  double err = 0.0;
  return 0.5 * boost::math::quadrature::gauss_kronrod<double, 31>::integrate(integrand, 0.0, rho1,
                                                                             30, 1e-14, &err);
}

const char *to_string(StopReason reason) {
  switch (reason) {
    case StopReason::hit_zero:
      return "hit_zero";
    case StopReason::hit_r0:
      return "hit_r0";
    case StopReason::horizon:
      return "horizon";
    default:
      return "running";
  }
}

const char *to_string(TripleMode mode) { return mode == TripleMode::torus ? "torus" : "scalar"; }

TripleState make_triple_torus(const TorusPoint &x0, const TangentVec &direction, double rho0,
                              double L) {
  const double nd = norm(direction);
  TripleState s;
  s.x = wrap(x0.x1, x0.x2, L);
  s.y = wrap(x0.x1 + rho0 * direction.v1 / nd, x0.x2 + rho0 * direction.v2 / nd, L);
  s.rho = torus_geodesic(s.x, s.y, L).distance;
  s.rho1 = s.rho2 = 0.5 * rho0;
  return s;
}

TripleState make_triple_scalar(double rho0) {
  TripleState s;
  s.rho = rho0;
  s.rho1 = s.rho2 = 0.5 * rho0;
  return s;
}

double pair_distance(const TripleState &state, const TripleConfig &cfg, double L) {
  if (cfg.mode == TripleMode::scalar) return state.rho;
  return torus_geodesic(state.x, state.y, L).distance;
}

TorusPoint middle_particle(const TripleState &state, double L) {
  const GeodesicData g = torus_geodesic(state.x, state.y, L);
  return geodesic_point(state.x, state.y, std::clamp(state.rho1, 0.0, g.distance), L);
}

TripleState triple_step(const TripleState &state, const FlowSolution *sol, double t, double dt,
                        RngStream &rng, const TripleConfig &cfg) {
  if (state.stopped()) return state;
  TripleState next = state;
  const double sq = std::sqrt(dt);
  const double dw1 = sq * rng.normal(), dw2 = sq * rng.normal(), dw3 = sq * rng.normal();

  double l = state.rho;
  double a = cfg.scalar_speed;
  double parallel = dw1;
  if (cfg.mode == TripleMode::torus) {
    if (!sol) throw std::invalid_argument("torus mode needs a flow solution");
    if (cfg.r != 0) throw std::invalid_argument("torus mode is flat (r = 0)");
    const double L = sol->L();
    const GeodesicData g = torus_geodesic(state.x, state.y, L);
    l = g.distance;
    next.direction = g.direction;
    const TorusPoint mid = wrap(state.x.x1 + 0.5 * l * g.direction.v1,
                                state.x.x2 + 0.5 * l * g.direction.v2, L);
    a = std::numbers::sqrt2 * std::exp(-sol->value(std::max(0.0, t - state.tau), mid));
    const TangentVec dw{dw1, dw2};
    const TangentVec m = reflect(dw, g.direction);
    next.x = wrap(state.x.x1 + a * dw1, state.x.x2 + a * dw2, L);
    next.y = wrap(state.y.x1 + a * m.v1, state.y.x2 + a * m.v2, L);
    parallel = dot(dw, g.direction);
    next.rho = torus_geodesic(next.x, next.y, L).distance;
  } else {
    if (cfg.r == 1) throw std::invalid_argument("scalar mode supports r = 0 and r = -1");
    const double drift = cfg.r == -1 ? drift_hyperbolic(a, a, l) : 0.0;
    next.rho = state.rho - 2.0 * a * parallel + drift * dt;
  }

  const JacobiSpec spec{cfg.r, l};
  const double r1 = std::clamp(state.rho1, 0.0, l), r2 = std::clamp(state.rho2, 0.0, l);
  const double alpha = a * jacobi_w(spec, r1);
  const double beta = beta_drift(spec, a, r1);
  double beta_tilde = beta_tilde_drift(spec, a, r2);
  if (cfg.negate_beta_tilde) beta_tilde = -beta_tilde;
  next.a = a;
  next.alpha1 = alpha;
  next.alpha2 = -alpha;
  next.theta = theta_drift(spec, a, r1);
  next.rho1 = state.rho1 - a * parallel + next.alpha1 * dw3 + beta * dt;
  next.rho2 = state.rho2 - a * parallel + next.alpha2 * dw3 + beta_tilde * dt;
  next.tau = state.tau + dt;
  if (next.rho1 <= 0.0 || next.rho2 <= 0.0) {
    next.reason = StopReason::hit_zero;
  } else if (next.rho1 >= cfg.r0 || next.rho2 >= cfg.r0) {
    next.reason = StopReason::hit_r0;
  }
  return next;
}

namespace {

TripleState start_state(const TripleRunSpec &spec, double L) {
  if (spec.cfg.mode == TripleMode::scalar) return make_triple_scalar(spec.rho0);
  if (!(spec.rho0 < spec.cfg.r0) || !(spec.cfg.r0 < 0.5 * L)) {
    throw std::invalid_argument("need rho0 < r0 < L/2");
  }
  return make_triple_torus(spec.x0, spec.direction, spec.rho0, L);
}

std::size_t step_count(double horizon, double dt) {
  return static_cast<std::size_t>(std::llround(horizon / dt));
}

}  // namespace

SumIdentityResult sum_identity_run(const FlowSolution *sol, double t, const TripleRunSpec &spec) {
  const double L = sol ? sol->L() : 1.0;
  const TripleState start = start_state(spec, L);
  const std::size_t steps = step_count(spec.horizon, spec.dt);
  std::vector<double> path_max(spec.M, 0.0);
  std::vector<char> antisym(spec.M, 1);
  parallel_for(spec.M, [&](std::size_t i) {
    RngStream rng(spec.seed, spec.stream_offset + i);
    TripleState s = start;
    for (std::size_t k = 0; k < steps && !s.stopped(); ++k) {
      s = triple_step(s, sol, t, spec.dt, rng, spec.cfg);
      if (s.alpha2 != -s.alpha1) antisym[i] = 0;
      if (s.stopped()) break;
      const double dev = std::abs(s.rho1 + s.rho2 - pair_distance(s, spec.cfg, L));
      path_max[i] = std::max(path_max[i], dev);
    }
  });
  SumIdentityResult out;
  out.steps = steps;
  for (std::size_t i = 0; i < spec.M; ++i) {
    out.max_deviation = std::max(out.max_deviation, path_max[i]);
    out.mean_path_max += path_max[i] / static_cast<double>(spec.M);
    if (!antisym[i]) out.antisymmetry_exact = false;
  }
  return out;
}

TerminalSamples triple_terminal_samples(const FlowSolution *sol, double t,
                                        const TripleRunSpec &spec) {
  const double L = sol ? sol->L() : 1.0;
  const TripleState start = start_state(spec, L);
  const std::size_t steps = step_count(spec.horizon, spec.dt);
  std::vector<TripleState> finals(spec.M);
  parallel_for(spec.M, [&](std::size_t i) {
    RngStream rng(spec.seed, spec.stream_offset + i);
    TripleState s = start;
    for (std::size_t k = 0; k < steps && !s.stopped(); ++k) {
      s = triple_step(s, sol, t, spec.dt, rng, spec.cfg);
    }
    finals[i] = s;
  });
  TerminalSamples out;
  for (const auto &s : finals) {
    if (s.stopped()) continue;
    out.rho1.push_back(s.rho1);
    out.rho2.push_back(s.rho2);
  }
  return out;
}

KsResult symmetry_test(const FlowSolution *sol, double t, const TripleRunSpec &spec) {
  TripleRunSpec first = spec, second = spec;
  second.stream_offset = spec.stream_offset + spec.M;
  const TerminalSamples a = triple_terminal_samples(sol, t, first);
  const TerminalSamples b = triple_terminal_samples(sol, t, second);
  if (a.rho1.size() < 100 || b.rho2.size() < 100) throw std::runtime_error("insufficient samples");
  return ks_two_sample(a.rho1, b.rho2);
}

ZMartingaleResult z_martingale_test(const FlowSolution &sol, double t, const SurfaceFunction &phi,
                                    const TripleRunSpec &spec,
                                    const std::vector<double> &checkpoints,
                                    bool drop_compensator) {
  if (spec.cfg.mode != TripleMode::torus) throw std::invalid_argument("needs torus mode");
  const double L = sol.L();
  const TripleState start = start_state(spec, L);
  std::vector<std::size_t> idx;
  std::size_t last = 0;
  for (double c : checkpoints) {
    idx.push_back(step_count(c, spec.dt));
    last = std::max(last, idx.back());
  }
  const double phi0 = phi.value(middle_particle(start, L));
  std::vector<std::vector<double>> values(checkpoints.size(), std::vector<double>(spec.M));
  parallel_for(spec.M, [&](std::size_t i) {
    RngStream rng(spec.seed, spec.stream_offset + i);
    TripleState s = start;
    double compensator = 0.0;
    double current = 0.0;
    TorusPoint z = middle_particle(s, L);
    for (std::size_t k = 0; k <= last; ++k) {
      for (std::size_t c = 0; c < idx.size(); ++c) {
        if (idx[c] == k) values[c][i] = current;
      }
      if (k == last || s.stopped()) {
        for (std::size_t c = 0; c < idx.size(); ++c) {
          if (idx[c] > k) values[c][i] = current;
        }
        if (s.stopped()) break;
        continue;
      }
      const TripleState n = triple_step(s, &sol, t, spec.dt, rng, spec.cfg);
      // Left-point rule with the pre-step state; n carries the coefficients used in the step.
      const double alpha = n.alpha1;
      const TangentVec g = phi.grad(z);
      compensator += (0.5 * alpha * alpha * phi.laplacian(z) + n.theta * dot(g, n.direction)) *
                     spec.dt;
      s = n;
      z = middle_particle(s, L);
      current = phi.value(z) - phi0 - (drop_compensator ? 0.0 : compensator);
    }
  });
  ZMartingaleResult out;
  for (std::size_t c = 0; c < checkpoints.size(); ++c) {
    const MCEstimate e = mc_reduce(values[c]);
    CompensatedCheckpoint cp{checkpoints[c], e.mean, e.std_error, 0.0};
    cp.gap_in_se = e.std_error > 0.0 ? std::abs(e.mean) / e.std_error : (e.mean == 0.0 ? 0.0 : 1e300);
    out.max_gap_in_se = std::max(out.max_gap_in_se, cp.gap_in_se);
    out.max_abs_mean = std::max(out.max_abs_mean, std::abs(e.mean));
    out.checkpoints.push_back(cp);
  }
  return out;
}

MCEstimate z_quadratic_variation_rate(const FlowSolution &sol, double t,
                                      const TripleRunSpec &spec) {
  const double L = sol.L();
  const TripleState start = start_state(spec, L);
  const std::size_t steps = step_count(spec.horizon, spec.dt);
  std::vector<double> rates(spec.M, -1.0);
  parallel_for(spec.M, [&](std::size_t i) {
    RngStream rng(spec.seed, spec.stream_offset + i);
    TripleState s = start;
    TorusPoint z = middle_particle(s, L);
    double qv = 0.0, elapsed = 0.0;
    for (std::size_t k = 0; k < steps; ++k) {
      const TripleState n = triple_step(s, &sol, t, spec.dt, rng, spec.cfg);
      if (n.stopped()) break;
      const TorusPoint zn = middle_particle(n, L);
      const double d = torus_geodesic(z, zn, L).distance;
      qv += d * d;
      elapsed += spec.dt;
      s = n;
      z = zn;
    }
    if (elapsed > 0.0) rates[i] = qv / (2.0 * elapsed);
  });
  std::vector<double> valid;
  for (double r : rates) {
    if (r >= 0.0) valid.push_back(r);
  }
  return mc_reduce(valid);
}

}  // namespace rflab
