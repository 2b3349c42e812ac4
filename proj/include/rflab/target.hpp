#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "rflab/analysis.hpp"
#include "rflab/flow.hpp"
#include "rflab/geometry.hpp"
#include "rflab/rng.hpp"

namespace rflab {

/// Control a(tau, x, p) steering the exponent coordinate of the controlled process.
using Control = std::function<TangentVec(double tau, const TorusPoint &x, double p)>;

constexpr double kControlClamp = 100.0;
constexpr double kExponentBlowup = 50.0;

struct PathSample {
  double tau = 0.0;
  TorusPoint x;
  double p = 0.0;
};

struct ControlledPath {
  double dt = 0.0;
  std::vector<PathSample> samples;  // every record_stride steps, including tau = 0
  TorusPoint terminal_x;
  double terminal_tau = 0.0;
  double terminal_p = 0.0;
  double on_section_max_dev = 0.0;
  std::size_t clamp_count = 0;
};

struct SimulationOptions {
  std::optional<double> p0;          // defaults to the section value p(t, x0), or 0 without sol
  std::size_t record_stride = 0;     // 0 records only the endpoints
  double stop_at = -1.0;             // stop early at this tau (negative: run to t)
  bool track_section = true;         // measure the distance to the solution section
};

/// Euler-Maruyama for dx = sqrt2 e^{-p} dW, dp = sqrt2 e^{-p} <a, dW> on the flat torus.
/// sol may be null; when given, the path tracks max |p_tau - p(t - tau, x_tau)|.
ControlledPath simulate_controlled(const FlowSolution *sol, double t, const TorusPoint &x0,
                                   const Control &control, double dt, RngStream &rng,
                                   const SimulationOptions &options = {});

/// Control a = grad p(t - tau, x) keeping the process on the solution section.
Control successful_control(const FlowSolution &sol, double t);

/// Zero control.
Control zero_control();

/// Monte Carlo estimate of E[p(0, x_t)] under the successful control.
MCEstimate representation_estimate(const FlowSolution &sol, double t, const TorusPoint &x0,
                                   std::size_t M, double dt, std::uint64_t seed);

struct MartingaleCheck {
  double tau = 0.0;
  double deviation = 0.0;
  double std_error = 0.0;
};

/// Deviation of the empirical mean of p_tau from p_0 at each checkpoint. A null control
/// selects the successful control.
std::vector<MartingaleCheck> martingale_test(const FlowSolution &sol, double t,
                                             const TorusPoint &x0,
                                             const std::vector<double> &checkpoints,
                                             std::size_t M, double dt, std::uint64_t seed,
                                             const Control &control = nullptr);

/// Smooth function phi(tau, x, p) with analytic derivatives.
struct TestFunction {
  std::function<double(double, const TorusPoint &, double)> value;
  std::function<double(double, const TorusPoint &, double)> d_tau;
  std::function<Sym2(double, const TorusPoint &, double)> hess_x;
  std::function<double(double, const TorusPoint &, double)> d_pp;
  std::function<TangentVec(double, const TorusPoint &, double)> d_xp;
};

/// Drift of phi along the controlled process for control value a (flat reference).
double generator(const TestFunction &phi, double tau, const TorusPoint &x, double p,
                 const TangentVec &a);

struct GeneratorResidual {
  double max_residual = 0.0;   // largest |empirical drift - generator|
  double std_error = 0.0;      // standard error at that sample point
  double max_gap_in_se = 0.0;  // largest |empirical - generator| / SE over points
};

/// One-step Monte Carlo drift of phi compared with the generator at each (tau, x, p).
GeneratorResidual generator_residual(const FlowSolution &sol, double t, const TestFunction &phi,
                                     const std::vector<PathSample> &sample_points, double dt,
                                     std::size_t M, std::uint64_t seed);

}  // namespace rflab
