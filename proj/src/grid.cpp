#include "rflab/grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace rflab {

GridField::GridField(std::size_t n, double L, double fill) : n_(n), L_(L), values_(n * n, fill) {
  if (n < 8 || (n & (n - 1)) != 0) {
    throw std::invalid_argument("grid size must be a power of two no smaller than 8");
  }
  if (!(L > 0.0)) throw std::invalid_argument("torus side must be positive");
}

GridField GridField::sample(std::size_t n, const std::function<double(double, double)> &f,
                            double L) {
  GridField g(n, L);
  const double h = g.h();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) g(i, j) = f(i * h, j * h);
  return g;
}

double GridField::at(long i, long j) const {
  const long n = static_cast<long>(n_);
  i %= n;
  j %= n;
  if (i < 0) i += n;
  if (j < 0) j += n;
  return values_[static_cast<std::size_t>(i * n + j)];
}

double GridField::min() const { return *std::min_element(values_.begin(), values_.end()); }
double GridField::max() const { return *std::max_element(values_.begin(), values_.end()); }
double GridField::sup_abs() const {
  double s = 0.0;
  for (double v : values_) s = std::max(s, std::abs(v));
  return s;
}

GridField laplacian(const GridField &f) {
  const std::size_t n = f.n();
  const double inv_h2 = 1.0 / (f.h() * f.h());
  GridField out(n, f.L());
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t ip = (i + 1) % n, im = (i + n - 1) % n;
    for (std::size_t j = 0; j < n; ++j) {
      const std::size_t jp = (j + 1) % n, jm = (j + n - 1) % n;
      out(i, j) = (f(ip, j) + f(im, j) + f(i, jp) + f(i, jm) - 4.0 * f(i, j)) * inv_h2;
    }
  }
  return out;
}

GridField rhs(const GridField &f, int r) {
  if (r != 0) throw std::invalid_argument("field evolution implemented for flat reference only");
  GridField out = laplacian(f);
  auto &v = out.values();
  const auto &p = f.values();
  for (std::size_t k = 0; k < v.size(); ++k) v[k] *= std::exp(-2.0 * p[k]);
  return out;
}

double area(const GridField &p) {
  double s = 0.0;
  for (double v : p.values()) s += std::exp(2.0 * v);
  return s * p.h() * p.h();
}

GridField normalize_area(const GridField &p0) {
  GridField out = p0;
  const double shift = 0.5 * std::log(area(p0) / (p0.L() * p0.L()));
  for (double &v : out.values()) v -= shift;
  return out;
}

void write_grid_csv(const GridField &f, double t, const std::string &path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  os << std::setprecision(17);
  os << "# n=" << f.n() << " L=" << f.L() << " t=" << t << '\n';
  for (std::size_t i = 0; i < f.n(); ++i) {
    for (std::size_t j = 0; j < f.n(); ++j) {
      if (j) os << ',';
      os << f(i, j);
    }
    os << '\n';
  }
}

GridField read_grid_csv(const std::string &path, double *t_out) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path);
  std::string header;
  std::getline(is, header);
  std::size_t n = 0;
  double L = 1.0, t = 0.0;
  if (std::sscanf(header.c_str(), "# n=%zu L=%lf t=%lf", &n, &L, &t) != 3) {
    throw std::runtime_error("malformed grid header in " + path);
  }
  GridField f(n, L);
  std::string line;
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::getline(is, line)) throw std::runtime_error("truncated grid file " + path);
    std::istringstream row(line);
    std::string cell;
    for (std::size_t j = 0; j < n; ++j) {
      if (!std::getline(row, cell, ',')) throw std::runtime_error("short row in " + path);
      f(i, j) = std::stod(cell);
    }
  }
  if (t_out) *t_out = t;
  return f;
}

}  // namespace rflab
