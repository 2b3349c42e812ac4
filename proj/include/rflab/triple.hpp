#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "rflab/analysis.hpp"
#include "rflab/flow.hpp"
#include "rflab/geometry.hpp"
#include "rflab/rng.hpp"

namespace rflab {

/// Jacobi weight problem w'' + r w = 0 on [0, l] with w(0) = w(l) = 1.
struct JacobiSpec {
  int r = 0;
  double l = 0.0;
};

void validate(const JacobiSpec &spec);
double jacobi_w(const JacobiSpec &spec, double s);
double jacobi_w_prime(const JacobiSpec &spec, double s);
/// Closed-form integral of w^2 over [0, x].
double jacobi_w2_integral(const JacobiSpec &spec, double x);

/// beta = a^2 / 2 (w(rho1) w'(rho1) - w'(0)).
double beta_drift(const JacobiSpec &spec, double a, double rho1);
inline double beta_tilde_drift(const JacobiSpec &spec, double a, double rho2) {
  return beta_drift(spec, a, rho2);
}

/// Drift of the middle particle along the geodesic.
double theta_drift(const JacobiSpec &spec, double a, double rho1);

/// 1/2 int_0^rho1 (|J'|^2 - r |J|^2) for J = a w1 + b w2 built from the Dirichlet basis,
/// computed by adaptive quadrature.
double index_form_beta(const JacobiSpec &spec, double a, double b, double rho1);

enum class TripleMode { torus, scalar };
enum class StopReason { running, hit_zero, hit_r0, horizon };

const char *to_string(StopReason reason);
const char *to_string(TripleMode mode);

struct TripleConfig {
  int r = 0;
  TripleMode mode = TripleMode::torus;
  double r0 = 0.2;
  double scalar_speed = 1.4142135623730951;  // time change used in scalar mode
  bool negate_beta_tilde = false;            // mutation switch for power checks
};

struct TripleState {
  double tau = 0.0;
  TorusPoint x, y;
  double rho = 0.0;  // geodesic length; tracked directly in scalar mode
  double rho1 = 0.0, rho2 = 0.0;
  StopReason reason = StopReason::running;
  double alpha1 = 0.0, alpha2 = 0.0;  // coefficients of dW3 used in the last step
  double a = 0.0;                     // time change used in the last step
  double theta = 0.0;                 // middle-particle drift at the pre-step state
  TangentVec direction{1.0, 0.0};     // pre-step geodesic direction

  bool stopped() const { return reason != StopReason::running; }
};

/// Torus state with x = x0, y at distance rho0 along direction, rho1 = rho2 = rho0 / 2.
TripleState make_triple_torus(const TorusPoint &x0, const TangentVec &direction, double rho0,
                              double L = 1.0);
/// Scalar state with rho = rho0 and rho1 = rho2 = rho0 / 2.
TripleState make_triple_scalar(double rho0);

/// One Euler step of the triple coupling. sol is required in torus mode only.
TripleState triple_step(const TripleState &state, const FlowSolution *sol, double t, double dt,
                        RngStream &rng, const TripleConfig &cfg);

/// Geodesic length of the pair (torus distance, or the scalar rho).
double pair_distance(const TripleState &state, const TripleConfig &cfg, double L = 1.0);

/// Point on the geodesic at arclength clamp(rho1, 0, rho).
TorusPoint middle_particle(const TripleState &state, double L = 1.0);

struct TripleRunSpec {
  TripleConfig cfg;
  double rho0 = 0.1;
  TorusPoint x0{0.3, 0.4};
  TangentVec direction{0.8, 0.6};
  std::size_t M = 1000;
  double dt = 1e-4;
  double horizon = 0.05;
  std::uint64_t seed = 1;
  std::uint64_t stream_offset = 0;
};

struct SumIdentityResult {
  double max_deviation = 0.0;       // worst |rho1 + rho2 - rho| over all paths and steps
  double mean_path_max = 0.0;       // average over paths of the per-path maximum
  bool antisymmetry_exact = true;   // dW3 coefficients exact negatives at every step
  std::size_t steps = 0;
};

SumIdentityResult sum_identity_run(const FlowSolution *sol, double t, const TripleRunSpec &spec);

/// Terminal values of rho1 and rho2 at T_obs for paths that have not stopped.
struct TerminalSamples {
  std::vector<double> rho1, rho2;
};
TerminalSamples triple_terminal_samples(const FlowSolution *sol, double t,
                                        const TripleRunSpec &spec);

/// KS test between rho1(T_obs) of one batch and rho2(T_obs) of an independent batch.
KsResult symmetry_test(const FlowSolution *sol, double t, const TripleRunSpec &spec);

/// Smooth periodic function on the torus with analytic gradient and Laplacian.
struct SurfaceFunction {
  std::function<double(const TorusPoint &)> value;
  std::function<TangentVec(const TorusPoint &)> grad;
  std::function<double(const TorusPoint &)> laplacian;
};

struct CompensatedCheckpoint {
  double tau = 0.0;
  double mean = 0.0;
  double std_error = 0.0;
  double gap_in_se = 0.0;
};

struct ZMartingaleResult {
  std::vector<CompensatedCheckpoint> checkpoints;
  double max_gap_in_se = 0.0;
  double max_abs_mean = 0.0;
};

/// Mean of phi(z_tau) - phi(z_0) - int (alpha^2/2 lap phi + theta <grad phi, gamma'>) at each
/// checkpoint, with paths frozen after stopping. drop_compensator removes the integral.
ZMartingaleResult z_martingale_test(const FlowSolution &sol, double t, const SurfaceFunction &phi,
                                    const TripleRunSpec &spec,
                                    const std::vector<double> &checkpoints,
                                    bool drop_compensator = false);

/// Per-path quadratic variation of the middle particle per coordinate and unit time.
MCEstimate z_quadratic_variation_rate(const FlowSolution &sol, double t,
                                       const TripleRunSpec &spec);

}  // namespace rflab
