#include "rflab/target.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "rflab/parallel.hpp"

namespace rflab {

ControlledPath simulate_controlled(const FlowSolution *sol, double t, const TorusPoint &x0,
                                   const Control &control, double dt, RngStream &rng,
                                   const SimulationOptions &options) {
  if (!(dt > 0.0) || dt > 1e-3) throw std::invalid_argument("dt must lie in (0, 1e-3]");
  if (!(t > 0.0)) throw std::invalid_argument("horizon must be positive");
  const double L = sol ? sol->L() : 1.0;
  const std::size_t steps = static_cast<std::size_t>(std::ceil(t / dt - 1e-9));
  const double h = t / static_cast<double>(steps);
  const double sqrt_h = std::sqrt(h);
  const double stop = options.stop_at < 0.0 ? t : options.stop_at;

  ControlledPath path;
  path.dt = h;
  TorusPoint x = wrap(x0.x1, x0.x2, L);
  double p = options.p0 ? *options.p0 : (sol ? sol->value(t, x) : 0.0);
  double tau = 0.0;
  path.samples.push_back({tau, x, p});
  for (std::size_t k = 1; k <= steps && tau < stop - 0.5 * h; ++k) {
    TangentVec a = control(tau, x, p);
    const double na = norm(a);
    if (na > kControlClamp) {
      a = {a.v1 * kControlClamp / na, a.v2 * kControlClamp / na};
      ++path.clamp_count;
    }
    const double dw1 = sqrt_h * rng.normal(), dw2 = sqrt_h * rng.normal();
    const double speed = std::numbers::sqrt2 * std::exp(-p);
    x = wrap(x.x1 + speed * dw1, x.x2 + speed * dw2, L);
    p += speed * (a.v1 * dw1 + a.v2 * dw2);
    tau = static_cast<double>(k) * h;
    if (!(std::abs(p) <= kExponentBlowup)) throw std::runtime_error("conformal exponent blow-up");
    if (sol && options.track_section) {
      const double dev = std::abs(p - sol->value(std::max(0.0, t - tau), x));
      path.on_section_max_dev = std::max(path.on_section_max_dev, dev);
    }
    if (options.record_stride > 0 && k % options.record_stride == 0) {
      path.samples.push_back({tau, x, p});
    }
  }
  path.terminal_x = x;
  path.terminal_tau = tau;
  path.terminal_p = p;
  if (path.samples.back().tau != tau) path.samples.push_back({tau, x, p});
  return path;
}

Control successful_control(const FlowSolution &sol, double t) {
  if (t > sol.final_time() + 1e-12) throw std::invalid_argument("solution does not cover horizon");
  return [&sol, t](double tau, const TorusPoint &x, double) {
    if (tau > t + 1e-12) throw std::invalid_argument("control queried past the horizon");
    return sol.grad(std::max(0.0, t - tau), x);
  };
}

Control zero_control() {
  return [](double, const TorusPoint &, double) { return TangentVec{0.0, 0.0}; };
}

MCEstimate representation_estimate(const FlowSolution &sol, double t, const TorusPoint &x0,
                                   std::size_t M, double dt, std::uint64_t seed) {
  const Control control = successful_control(sol, t);
  std::vector<double> values(M);
  parallel_for(M, [&](std::size_t i) {
    RngStream rng(seed, i);
    SimulationOptions opt;
    opt.track_section = false;
    const ControlledPath path = simulate_controlled(&sol, t, x0, control, dt, rng, opt);
    values[i] = sol.value(0.0, path.terminal_x);
  });
  return mc_reduce(values);
}

std::vector<MartingaleCheck> martingale_test(const FlowSolution &sol, double t,
                                             const TorusPoint &x0,
                                             const std::vector<double> &checkpoints,
                                             std::size_t M, double dt, std::uint64_t seed,
                                             const Control &control) {
  const Control ctl = control ? control : successful_control(sol, t);
  const std::size_t steps = static_cast<std::size_t>(std::ceil(t / dt - 1e-9));
  const double h = t / static_cast<double>(steps);
  std::vector<std::size_t> idx;
  double last = 0.0;
  for (double c : checkpoints) {
    if (c < 0.0 || c > t + 1e-12) throw std::invalid_argument("checkpoint outside [0, t]");
    idx.push_back(static_cast<std::size_t>(std::llround(c / h)));
    last = std::max(last, c);
  }
  const double p0 = sol.value(t, x0);
  std::vector<std::vector<double>> values(checkpoints.size(), std::vector<double>(M));
  parallel_for(M, [&](std::size_t i) {
    RngStream rng(seed, i);
    SimulationOptions opt;
    opt.record_stride = 1;
    opt.stop_at = last;
    opt.p0 = p0;
    opt.track_section = false;
    const ControlledPath path = simulate_controlled(&sol, t, x0, ctl, dt, rng, opt);
    for (std::size_t c = 0; c < idx.size(); ++c) values[c][i] = path.samples.at(idx[c]).p;
  });
  std::vector<MartingaleCheck> out;
  for (std::size_t c = 0; c < checkpoints.size(); ++c) {
    const MCEstimate e = mc_reduce(values[c]);
    out.push_back({checkpoints[c], std::abs(e.mean - p0), e.std_error});
  }
  return out;
}

double generator(const TestFunction &phi, double tau, const TorusPoint &x, double p,
                 const TangentVec &a) {
  const double e = std::exp(-2.0 * p);
  const Sym2 H = phi.hess_x(tau, x, p);
  const TangentVec xp = phi.d_xp(tau, x, p);
  return phi.d_tau(tau, x, p) + e * (H.h11 + H.h22) + e * dot(a, a) * phi.d_pp(tau, x, p) +
         2.0 * e * dot(a, xp);
}

GeneratorResidual generator_residual(const FlowSolution &sol, double t, const TestFunction &phi,
                                     const std::vector<PathSample> &sample_points, double dt,
                                     std::size_t M, std::uint64_t seed) {
  const Control control = successful_control(sol, t);
  GeneratorResidual out;
  for (std::size_t s = 0; s < sample_points.size(); ++s) {
    const PathSample &pt = sample_points[s];
    const TangentVec a = control(pt.tau, pt.x, pt.p);
    const double base = phi.value(pt.tau, pt.x, pt.p);
    const double speed = std::numbers::sqrt2 * std::exp(-pt.p);
    const double sqrt_h = std::sqrt(dt);
    std::vector<double> drift(M);
    parallel_for(M, [&](std::size_t i) {
      RngStream rng(seed, s * M + i);
      const double dw1 = sqrt_h * rng.normal(), dw2 = sqrt_h * rng.normal();
      const TorusPoint x = wrap(pt.x.x1 + speed * dw1, pt.x.x2 + speed * dw2, sol.L());
      const double p = pt.p + speed * (a.v1 * dw1 + a.v2 * dw2);
      drift[i] = (phi.value(pt.tau + dt, x, p) - base) / dt;
    });
    const MCEstimate e = mc_reduce(drift);
    const double residual = std::abs(e.mean - generator(phi, pt.tau, pt.x, pt.p, a));
    if (residual >= out.max_residual) {
      out.max_residual = residual;
      out.std_error = e.std_error;
    }
    if (e.std_error > 0.0) out.max_gap_in_se = std::max(out.max_gap_in_se, residual / e.std_error);
  }
  return out;
}

}  // namespace rflab
