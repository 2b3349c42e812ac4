#pragma once

#include <array>
#include <string>
#include <vector>

#include "rflab/geometry.hpp"
#include "rflab/grid.hpp"

namespace rflab {

/// Symmetric 2x2 matrix (h11, h12, h22).
struct Sym2 {
  double h11 = 0.0;
  double h12 = 0.0;
  double h22 = 0.0;
};

/// Value, gradient and Hessian of an interpolated field at one point.
struct Jet {
  double p = 0.0;
  TangentVec grad;
  Sym2 hess;
};

struct SupNorms {
  double p_inf = 0.0;
  double grad_inf = 0.0;
  double hess_inf = 0.0;
};

/// Time-indexed stack of grid fields with a periodic bicubic spline in space and linear
/// interpolation in time. Immutable after construction.
class FlowSolution {
 public:
  FlowSolution(std::vector<double> times, std::vector<GridField> fields, double dt_solver);

  /// Constant field c on [0, T], stored as two snapshots.
  static FlowSolution constant(std::size_t n, double c, double T, double L = 1.0);

  const std::vector<double> &times() const { return times_; }
  const std::vector<GridField> &fields() const { return fields_; }
  double dt_solver() const { return dt_solver_; }
  double final_time() const { return times_.back(); }
  std::size_t n() const { return fields_.front().n(); }
  double L() const { return fields_.front().L(); }

  /// Snapshot stored at time t (within 1e-9); throws if t was not saved.
  const GridField &snapshot(double t) const;
  std::size_t snapshot_index(double t) const;

  double value(double t, const TorusPoint &x) const;
  TangentVec grad(double t, const TorusPoint &x) const;
  Sym2 hess(double t, const TorusPoint &x) const;
  Jet jet(double t, const TorusPoint &x) const;

  /// Writes one CSV per snapshot plus manifest.json into dir.
  void save(const std::string &dir) const;
  static FlowSolution load(const std::string &dir);

 private:
  struct Node {
    double f, fx, fy, fxy;
  };
  enum class Order { value, grad, hess };
  Jet eval_snapshot(std::size_t k, const TorusPoint &x, Order order) const;
  Jet eval(double t, const TorusPoint &x, Order order) const;

  std::vector<double> times_;
  std::vector<GridField> fields_;
  std::vector<std::vector<Node>> nodes_;
  double dt_solver_ = 0.0;
};

/// Largest stable explicit step for initial data p0.
double cfl_limit(const GridField &p0);

/// Advances p by one explicit Euler step of the area form u = e^{2p}, u' = 2 lap p.
void euler_step(GridField &p, double dt);

/// Integrates the flow from area-normalized p0 to time T, saving every save_every.
/// The internal step is the largest value <= dt that divides save_every evenly.
FlowSolution solve(const GridField &p0, double T, double dt, double save_every);

/// Grid sup norms of p, its centered-difference gradient and Frobenius Hessian.
SupNorms sup_norms(const GridField &f);
SupNorms sup_norms(const FlowSolution &sol, double t);

/// (p(z - r xi) - 2 p(z) + p(z + r xi)) / r^2 at time t.
double second_difference_quotient(const FlowSolution &sol, double t, const TorusPoint &z,
                                  const TangentVec &xi, double rho0);

/// Oscillation max - min of the grid values.
inline double oscillation(const GridField &f) { return f.max() - f.min(); }

}  // namespace rflab
