#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

namespace rflab {

/// Periodic n x n sample of the conformal exponent on the square torus of side L.
/// values[i * n + j] holds p(i h, j h) with h = L / n; i runs along x1.
class GridField {
 public:
  GridField() = default;
  GridField(std::size_t n, double L = 1.0, double fill = 0.0);

  /// Samples f(x1, x2) at the grid nodes.
  static GridField sample(std::size_t n, const std::function<double(double, double)> &f,
                          double L = 1.0);

  std::size_t n() const { return n_; }
  double L() const { return L_; }
  double h() const { return L_ / static_cast<double>(n_); }

  double &operator()(std::size_t i, std::size_t j) { return values_[i * n_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return values_[i * n_ + j]; }
  /// Periodic access with signed indices.
  double at(long i, long j) const;

  const std::vector<double> &values() const { return values_; }
  std::vector<double> &values() { return values_; }

  double min() const;
  double max() const;
  double sup_abs() const;

 private:
  std::size_t n_ = 0;
  double L_ = 1.0;
  std::vector<double> values_;
};

/// Five-point periodic Laplacian (analyst's sign convention).
GridField laplacian(const GridField &f);

/// Right-hand side e^{-2p} lap p of the flow on the flat torus. Only r = 0 is supported.
GridField rhs(const GridField &f, int r = 0);

/// Quadrature of e^{2p} over the torus (trapezoidal rule, exact for the periodic grid).
double area(const GridField &p);

/// Shifts p by a constant so that its area equals L^2.
GridField normalize_area(const GridField &p0);

/// CSV with a `# n=<n> L=<L> t=<t>` header followed by n rows of n values.
void write_grid_csv(const GridField &f, double t, const std::string &path);
GridField read_grid_csv(const std::string &path, double *t_out = nullptr);

}  // namespace rflab
