#include "rflab/coupling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "rflab/analysis.hpp"
#include "rflab/parallel.hpp"

namespace rflab {

CouplingState make_coupling_state(const TorusPoint &x, const TorusPoint &y, double L) {
  CouplingState s;
  s.x = wrap(x.x1, x.x2, L);
  s.y = wrap(y.x1, y.x2, L);
  s.rho = torus_geodesic(s.x, s.y, L).distance;
  s.coupled = s.rho == 0.0;
  s.ux = {s.x.x1, s.x.x2};
  s.uy = {s.y.x1, s.y.x2};
  return s;
}

std::pair<double, double> time_changes(const CouplingState &s, const FlowSolution &sol, double t) {
  const double at = std::max(0.0, t - s.tau);
  return {std::numbers::sqrt2 * std::exp(-sol.value(at, s.x)),
          std::numbers::sqrt2 * std::exp(-sol.value(at, s.y))};
}

CouplingState mirror_step_with(const CouplingState &state, const FlowSolution &sol, double t,
                               double dt, const TangentVec &dw) {
  CouplingState next = state;
  next.tau = state.tau + dt;
  if (state.coupled) return next;
  const double L = sol.L();
  const auto [a, b] = time_changes(state, sol, t);
  const GeodesicData g = torus_geodesic(state.x, state.y, L);
  const TangentVec m = reflect(dw, g.direction);
  const TangentVec dx{a * dw.v1, a * dw.v2};
  const TangentVec dy{b * m.v1, b * m.v2};
  next.x = wrap(state.x.x1 + dx.v1, state.x.x2 + dx.v2, L);
  next.y = wrap(state.y.x1 + dy.v1, state.y.x2 + dy.v2, L);
  next.ux = {state.ux.v1 + dx.v1, state.ux.v2 + dx.v2};
  next.uy = {state.uy.v1 + dy.v1, state.uy.v2 + dy.v2};
  next.rho = torus_geodesic(next.x, next.y, L).distance;
  if (next.rho < coupling_threshold(dt)) {
    next.coupled = true;
    next.y = next.x;
    next.uy = next.ux;
    next.rho = 0.0;
  }
  return next;
}

CouplingState mirror_step(const CouplingState &state, const FlowSolution &sol, double t, double dt,
                          RngStream &rng) {
  const double sq = std::sqrt(dt);
  const TangentVec dw{sq * rng.normal(), sq * rng.normal()};
  return mirror_step_with(state, sol, t, dt, dw);
}

double drift_hyperbolic(double a, double b, double rho) {
  return 0.5 * ((a - b) * (a - b) / std::tanh(rho) + 2.0 * a * b * std::tanh(0.5 * rho));
}

DriftCheck distance_drift_check(const FlowSolution &sol, double t, double rho0, std::size_t M,
                                double dt, std::uint64_t seed, std::size_t n_bins) {
  if (!(rho0 > 0.05 && rho0 < 0.3)) throw std::invalid_argument("rho0 must lie in (0.05, 0.3)");
  struct Sample {
    double rho, raw, cv, predicted;
    bool valid;
  };
  std::vector<Sample> samples(M);
  const double L = sol.L();
  parallel_for(M, [&](std::size_t i) {
    RngStream rng(seed, i);
    const TorusPoint x = wrap(rng.uniform() * L, rng.uniform() * L, L);
    const double angle = 2.0 * std::numbers::pi * rng.uniform();
    const double rho = rho0 * (0.5 + rng.uniform());
    const TorusPoint y = wrap(x.x1 + rho * std::cos(angle), x.x2 + rho * std::sin(angle), L);
    const CouplingState s = make_coupling_state(x, y, L);
    const GeodesicData g = torus_geodesic(s.x, s.y, L);
    const auto [a, b] = time_changes(s, sol, t);
    const double sq = std::sqrt(dt);
    const TangentVec dw{sq * rng.normal(), sq * rng.normal()};
    const CouplingState n = mirror_step_with(s, sol, t, dt, dw);
    const GeodesicData gn = torus_geodesic(n.x, n.y, L);
    const double d_rho = n.rho - s.rho;
    samples[i].rho = s.rho;
    samples[i].raw = d_rho / dt;
    samples[i].cv = (d_rho + (a + b) * dot(dw, g.direction)) / dt;
    samples[i].predicted = drift_flat(a, b, s.rho);
    samples[i].valid = g.multiplicity == 1 && gn.multiplicity == 1 && !n.coupled;
  });

  DriftCheck out;
  const double lo = 0.5 * rho0, hi = 1.5 * rho0;
  for (std::size_t k = 0; k < n_bins; ++k) {
    DriftBin bin;
    bin.rho_lo = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(n_bins);
    bin.rho_hi = lo + (hi - lo) * static_cast<double>(k + 1) / static_cast<double>(n_bins);
    std::vector<double> raw, cv;
    double pred = 0.0;
    for (const Sample &s : samples) {
      if (!s.valid || s.rho < bin.rho_lo || s.rho >= bin.rho_hi) continue;
      raw.push_back(s.raw);
      cv.push_back(s.cv);
      pred += s.predicted;
    }
    if (raw.size() < 50) continue;
    bin.count = raw.size();
    bin.predicted = pred / static_cast<double>(raw.size());
    const MCEstimate er = mc_reduce(raw), ec = mc_reduce(cv);
    bin.empirical = er.mean;
    bin.std_error = er.std_error;
    bin.empirical_cv = ec.mean;
    bin.std_error_cv = ec.std_error;
    auto gap = [](double e, double p, double se) {
      if (se > 0.0) return std::abs(e - p) / se;
      return e == p ? 0.0 : std::numeric_limits<double>::infinity();
    };
    out.max_gap = std::max(out.max_gap, gap(er.mean, bin.predicted, er.std_error));
    out.max_gap_cv = std::max(out.max_gap_cv, gap(ec.mean, bin.predicted, ec.std_error));
    out.max_predicted = std::max(out.max_predicted, bin.predicted);
    out.bins.push_back(bin);
  }
  return out;
}

SurvivalCurve coupling_survival(const FlowSolution &sol, double t, const TorusPoint &x0,
                                const TorusPoint &y0, std::size_t M, double dt, std::uint64_t seed,
                                const std::vector<double> &s_grid) {
  const double L = sol.L();
  const CouplingState start = make_coupling_state(x0, y0, L);
  if (start.coupled) throw std::invalid_argument("starting points must differ");
  double s_max = 0.0;
  for (double s : s_grid) s_max = std::max(s_max, s);
  if (s_max > t + 1e-12) throw std::invalid_argument("survival grid exceeds the horizon");
  const std::size_t steps = static_cast<std::size_t>(std::ceil(s_max / dt - 1e-9));
  std::vector<double> sigma(M);
  parallel_for(M, [&](std::size_t i) {
    RngStream rng(seed, i);
    CouplingState s = start;
    sigma[i] = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < steps; ++k) {
      s = mirror_step(s, sol, t, dt, rng);
      if (s.coupled) {
        sigma[i] = s.tau;
        break;
      }
    }
  });
  SurvivalCurve curve;
  curve.s_grid = s_grid;
  curve.n_paths = M;
  for (double s : s_grid) {
    const double alive = static_cast<double>(
        std::count_if(sigma.begin(), sigma.end(), [s](double sg) { return sg > s + 1e-12; }));
    const double p = alive / static_cast<double>(M);
    curve.survival.push_back(p);
    curve.std_error.push_back(std::sqrt(p * (1.0 - p) / static_cast<double>(M)));
  }
  return curve;
}

double bessel_survival_bound(double delta, double D, double s) {
  if (!(delta > 0.0 && delta < 2.0)) throw std::invalid_argument("dimension must lie in (0, 2)");
  if (!(D > 0.0) || !(s > 0.0)) throw std::invalid_argument("D and s must be positive");
  // Substituting y = v^m with m = 1 / (1 - delta/2) removes the endpoint singularity:
  // y^{-delta/2} e^{-y} dy = m e^{-v^m} dv. The range is split where y doubles so every
  // piece is smooth on its own scale.
  const double nu = 1.0 - 0.5 * delta;
  const double m = 1.0 / nu;
  const double y_max = std::min(D / s, 800.0);
  auto f = [m](double v) { return m * std::exp(-std::pow(v, m)); };
  double integral = 0.0;
  double y_lo = 0.0;
  for (double y_hi = std::min(0.5, y_max); y_lo < y_max; y_hi = std::min(2.0 * y_hi, y_max)) {
    integral += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
        f, std::pow(y_lo, nu), std::pow(y_hi, nu), 12, 1e-15);
    y_lo = y_hi;
  }
  return std::min(1.0, integral / std::tgamma(nu));
}

double reporting_dimension(double A, double B) {
  const double q = (B - A) / (B + A);
  return 1.0 + q * q;
}

double gaussian_hit_tail(double rho0, double c) {
  if (!(rho0 > 0.0) || !(c > 0.0)) throw std::invalid_argument("rho0 and c must be positive");
  return std::erf(rho0 / std::sqrt(2.0 * c));
}

OscillationCheck oscillation_contraction_check(const FlowSolution &sol, double t, double s,
                                               std::size_t M, double dt, std::uint64_t seed) {
  if (!(s > 0.0 && s < t)) throw std::invalid_argument("need 0 < s < t");
  const GridField &now = sol.snapshot(t);
  const GridField &prev = sol.snapshot(t - s);
  OscillationCheck out;
  out.osc_t = oscillation(now);
  out.osc_prev = oscillation(prev);
  if (out.osc_prev == 0.0) {
    out.holds = out.osc_t == 0.0;
    return out;
  }
  const auto &v = now.values();
  const std::size_t imax = static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
  const std::size_t imin = static_cast<std::size_t>(std::min_element(v.begin(), v.end()) - v.begin());
  const std::size_t n = now.n();
  const double h = now.h();
  const TorusPoint x0{static_cast<double>(imax / n) * h, static_cast<double>(imax % n) * h};
  const TorusPoint y0{static_cast<double>(imin / n) * h, static_cast<double>(imin % n) * h};
  const SurvivalCurve curve = coupling_survival(sol, t, x0, y0, M, dt, seed, {s});
  out.survival = curve.survival[0];
  out.survival_se = curve.std_error[0];
  out.bound = out.survival * out.osc_prev;
  out.margin = out.bound + 3.0 * out.survival_se * out.osc_prev - out.osc_t;
  out.holds = out.margin >= 0.0;
  return out;
}

}  // namespace rflab
