#pragma once

#include <cstdint>
#include <vector>

#include "rflab/flow.hpp"
#include "rflab/geometry.hpp"
#include "rflab/rng.hpp"

namespace rflab {

/// Two mirror-coupled particles. ux, uy are unwrapped shadow coordinates.
struct CouplingState {
  double tau = 0.0;
  TorusPoint x, y;
  double rho = 0.0;
  bool coupled = false;
  TangentVec ux, uy;
};

CouplingState make_coupling_state(const TorusPoint &x, const TorusPoint &y, double L = 1.0);

/// Distance below which two discretized particles are declared coupled.
inline double coupling_threshold(double dt) { return 2.0 * std::sqrt(dt); }

/// Time changes a = sqrt2 e^{-p(t - tau, x)} and b = sqrt2 e^{-p(t - tau, y)}.
std::pair<double, double> time_changes(const CouplingState &s, const FlowSolution &sol, double t);

/// One mirror-coupled step driven by the increment dw (already scaled by sqrt dt).
CouplingState mirror_step_with(const CouplingState &state, const FlowSolution &sol, double t,
                               double dt, const TangentVec &dw);

/// One mirror-coupled step with a fresh N(0, dt) increment.
CouplingState mirror_step(const CouplingState &state, const FlowSolution &sol, double t, double dt,
                          RngStream &rng);

/// Drift of the distance process for the hyperbolic reference.
double drift_hyperbolic(double a, double b, double rho);

/// Drift of the distance process for the flat reference.
inline double drift_flat(double a, double b, double rho) { return 0.5 * (a - b) * (a - b) / rho; }

struct DriftBin {
  double rho_lo = 0.0, rho_hi = 0.0;
  std::size_t count = 0;
  double predicted = 0.0;
  double empirical = 0.0;      // raw mean of d rho / dt
  double std_error = 0.0;
  double empirical_cv = 0.0;   // mean after subtracting the known martingale increment
  double std_error_cv = 0.0;
};

struct DriftCheck {
  std::vector<DriftBin> bins;
  double max_gap = 0.0;     // raw estimator, in standard errors
  double max_gap_cv = 0.0;  // control-variate estimator, in standard errors
  double max_predicted = 0.0;
};

/// One-step samples of the distance process from M random configurations with distance
/// uniform in [rho0 / 2, 3 rho0 / 2], binned by distance and compared with the flat drift.
/// Bins with fewer than 50 samples are dropped.
DriftCheck distance_drift_check(const FlowSolution &sol, double t, double rho0, std::size_t M,
                                double dt, std::uint64_t seed, std::size_t n_bins = 10);

struct SurvivalCurve {
  std::vector<double> s_grid;
  std::vector<double> survival;
  std::vector<double> std_error;
  std::size_t n_paths = 0;
};

/// Empirical P(s < sigma) for the coupling time sigma of M mirror-coupled paths.
SurvivalCurve coupling_survival(const FlowSolution &sol, double t, const TorusPoint &x0,
                                const TorusPoint &y0, std::size_t M, double dt, std::uint64_t seed,
                                const std::vector<double> &s_grid);

/// Regularized lower incomplete gamma Gamma(1 - delta/2)^{-1} int_0^{D/s} y^{-delta/2} e^{-y} dy
/// by adaptive quadrature.
double bessel_survival_bound(double delta, double D, double s);

/// Bessel dimension used for reporting, 1 + ((B - A) / (B + A))^2.
double reporting_dimension(double A, double B);

/// P(c < first hitting time of -rho0) for standard Brownian motion: erf(rho0 / sqrt(2c)).
double gaussian_hit_tail(double rho0, double c);

struct OscillationCheck {
  double osc_t = 0.0;
  double osc_prev = 0.0;
  double survival = 0.0;
  double survival_se = 0.0;
  double bound = 0.0;
  double margin = 0.0;  // bound + 3 SE * osc_prev - osc_t
  bool holds = false;
};

/// Compares osc p(t) with P(s < sigma) osc p(t - s) for the argmax / argmin starting pair.
OscillationCheck oscillation_contraction_check(const FlowSolution &sol, double t, double s,
                                               std::size_t M, double dt, std::uint64_t seed);

}  // namespace rflab
