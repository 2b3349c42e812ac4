#include "rflab/flow.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>

#include "json.hpp"

namespace rflab {

namespace {

// Convolution kernel of the periodic cubic-spline derivative: the slopes s solve
// s[i-1] + 4 s[i] + s[i+1] = 3 (f[i+1] - f[i-1]) / h. The inverse circulant decays like
// (2 - sqrt 3)^|k|, so the kernel is truncated once it drops below 1e-18.
const std::vector<std::pair<long, double>> &spline_kernel(std::size_t n) {
  static std::mutex mu;
  static std::map<std::size_t, std::vector<std::pair<long, double>>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  std::vector<std::pair<long, double>> kernel;
  const double two_pi = 2.0 * std::numbers::pi;
  // Unit-spacing kernel: multiply by 1/h at use.
  std::vector<double> full(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    double s = 0.0;
    for (std::size_t m = 0; m < n; ++m) {
      const double th = two_pi * static_cast<double>(m) / static_cast<double>(n);
      s += 6.0 * std::sin(th) / (4.0 + 2.0 * std::cos(th)) *
           std::sin(th * static_cast<double>(k));
    }
    full[k] = s / static_cast<double>(n);
  }
  for (std::size_t k = 0; k < n; ++k) {
    if (std::abs(full[k]) < 1e-18) continue;
    long off = static_cast<long>(k);
    if (off > static_cast<long>(n / 2)) off -= static_cast<long>(n);
    kernel.emplace_back(off, full[k]);
  }
  return cache.emplace(n, std::move(kernel)).first->second;
}

// Applies the spline derivative along axis 0 (x1) or 1 (x2).
std::vector<double> spline_derivative(const std::vector<double> &f, std::size_t n, double h,
                                      int axis) {
  const auto &kernel = spline_kernel(n);
  std::vector<double> out(n * n, 0.0);
  const long N = static_cast<long>(n);
  for (long i = 0; i < N; ++i) {
    for (long j = 0; j < N; ++j) {
      double s = 0.0;
      for (const auto &[off, w] : kernel) {
        const long ii = axis == 0 ? (i + off + N) % N : i;
        const long jj = axis == 1 ? (j + off + N) % N : j;
        s += w * f[static_cast<std::size_t>(ii * N + jj)];
      }
      out[static_cast<std::size_t>(i * N + j)] = s / h;
    }
  }
  return out;
}

struct Basis {
  double a[2], b[2];     // value / slope weights of the two corners
  double da[2], db[2];   // first derivatives in physical units
  double dda[2], ddb[2]; // second derivatives in physical units
};

Basis hermite(double u, double h) {
  const double u2 = u * u, u3 = u2 * u;
  Basis B{};
  B.a[0] = 2 * u3 - 3 * u2 + 1;
  B.a[1] = -2 * u3 + 3 * u2;
  B.b[0] = h * (u3 - 2 * u2 + u);
  B.b[1] = h * (u3 - u2);
  B.da[0] = (6 * u2 - 6 * u) / h;
  B.da[1] = (-6 * u2 + 6 * u) / h;
  B.db[0] = 3 * u2 - 4 * u + 1;
  B.db[1] = 3 * u2 - 2 * u;
  B.dda[0] = (12 * u - 6) / (h * h);
  B.dda[1] = (-12 * u + 6) / (h * h);
  B.ddb[0] = (6 * u - 4) / h;
  B.ddb[1] = (6 * u - 2) / h;
  return B;
}

}  // namespace

FlowSolution::FlowSolution(std::vector<double> times, std::vector<GridField> fields,
                           double dt_solver)
    : times_(std::move(times)), fields_(std::move(fields)), dt_solver_(dt_solver) {
  if (times_.empty() || times_.size() != fields_.size()) {
    throw std::invalid_argument("flow solution needs one field per time");
  }
  if (times_.front() != 0.0) throw std::invalid_argument("flow solution must start at t=0");
  for (std::size_t k = 1; k < times_.size(); ++k) {
    if (!(times_[k] > times_[k - 1])) throw std::invalid_argument("times must increase");
    if (fields_[k].n() != fields_[0].n() || fields_[k].L() != fields_[0].L()) {
      throw std::invalid_argument("all snapshots must share n and L");
    }
  }
  const std::size_t n = fields_[0].n();
  const double h = fields_[0].h();
  nodes_.reserve(fields_.size());
  for (const auto &f : fields_) {
    const auto fx = spline_derivative(f.values(), n, h, 0);
    const auto fy = spline_derivative(f.values(), n, h, 1);
    const auto fxy = spline_derivative(fx, n, h, 1);
    std::vector<Node> nodes(n * n);
    for (std::size_t k = 0; k < n * n; ++k) nodes[k] = {f.values()[k], fx[k], fy[k], fxy[k]};
    nodes_.push_back(std::move(nodes));
  }
}

FlowSolution FlowSolution::constant(std::size_t n, double c, double T, double L) {
  if (!(T > 0.0)) throw std::invalid_argument("horizon must be positive");
  GridField f(n, L, c);
  return FlowSolution({0.0, T}, {f, f}, T);
}

std::size_t FlowSolution::snapshot_index(double t) const {
  auto it = std::lower_bound(times_.begin(), times_.end(), t - 1e-9);
  if (it == times_.end() || std::abs(*it - t) > 1e-9) {
    throw std::invalid_argument("time is not a saved snapshot");
  }
  return static_cast<std::size_t>(it - times_.begin());
}

const GridField &FlowSolution::snapshot(double t) const { return fields_[snapshot_index(t)]; }

Jet FlowSolution::eval_snapshot(std::size_t k, const TorusPoint &x, Order order) const {
  const GridField &f = fields_[k];
  const std::size_t n = f.n();
  const double h = f.h();
  const double s1 = x.x1 / h, s2 = x.x2 / h;
  double c1 = std::floor(s1), c2 = std::floor(s2);
  const double u = s1 - c1, v = s2 - c2;
  const std::size_t i0 = static_cast<std::size_t>(c1) % n, j0 = static_cast<std::size_t>(c2) % n;
  const std::size_t i1 = (i0 + 1) % n, j1 = (j0 + 1) % n;
  const Node *nd = nodes_[k].data();
  const Node *corner[2][2] = {{&nd[i0 * n + j0], &nd[i0 * n + j1]},
                              {&nd[i1 * n + j0], &nd[i1 * n + j1]}};
  const Basis X = hermite(u, h), Y = hermite(v, h);
  Jet J;
  for (int a = 0; a < 2; ++a) {
    for (int b = 0; b < 2; ++b) {
      const Node &c = *corner[a][b];
      J.p += c.f * X.a[a] * Y.a[b] + c.fx * X.b[a] * Y.a[b] + c.fy * X.a[a] * Y.b[b] +
             c.fxy * X.b[a] * Y.b[b];
      if (order == Order::value) continue;
      J.grad.v1 += c.f * X.da[a] * Y.a[b] + c.fx * X.db[a] * Y.a[b] + c.fy * X.da[a] * Y.b[b] +
                   c.fxy * X.db[a] * Y.b[b];
      J.grad.v2 += c.f * X.a[a] * Y.da[b] + c.fx * X.b[a] * Y.da[b] + c.fy * X.a[a] * Y.db[b] +
                   c.fxy * X.b[a] * Y.db[b];
      if (order == Order::grad) continue;
      J.hess.h11 += c.f * X.dda[a] * Y.a[b] + c.fx * X.ddb[a] * Y.a[b] +
                    c.fy * X.dda[a] * Y.b[b] + c.fxy * X.ddb[a] * Y.b[b];
      J.hess.h22 += c.f * X.a[a] * Y.dda[b] + c.fx * X.b[a] * Y.dda[b] +
                    c.fy * X.a[a] * Y.ddb[b] + c.fxy * X.b[a] * Y.ddb[b];
      J.hess.h12 += c.f * X.da[a] * Y.da[b] + c.fx * X.db[a] * Y.da[b] +
                    c.fy * X.da[a] * Y.db[b] + c.fxy * X.db[a] * Y.db[b];
    }
  }
  return J;
}

Jet FlowSolution::eval(double t, const TorusPoint &x, Order order) const {
  if (t < -1e-12 || t > times_.back() + 1e-12) {
    throw std::out_of_range("interpolation time outside the solved horizon");
  }
  auto it = std::upper_bound(times_.begin(), times_.end(), t);
  if (it == times_.end()) return eval_snapshot(times_.size() - 1, x, order);
  const std::size_t k1 = static_cast<std::size_t>(it - times_.begin());
  if (k1 == 0) return eval_snapshot(0, x, order);
  const std::size_t k0 = k1 - 1;
  const double w = (t - times_[k0]) / (times_[k1] - times_[k0]);
  if (w == 0.0) return eval_snapshot(k0, x, order);
  const Jet A = eval_snapshot(k0, x, order), B = eval_snapshot(k1, x, order);
  const double wa = 1.0 - w;
  Jet J;
  J.p = wa * A.p + w * B.p;
  J.grad = {wa * A.grad.v1 + w * B.grad.v1, wa * A.grad.v2 + w * B.grad.v2};
  J.hess = {wa * A.hess.h11 + w * B.hess.h11, wa * A.hess.h12 + w * B.hess.h12,
            wa * A.hess.h22 + w * B.hess.h22};
  return J;
}

double FlowSolution::value(double t, const TorusPoint &x) const {
  return eval(t, x, Order::value).p;
}
TangentVec FlowSolution::grad(double t, const TorusPoint &x) const {
  return eval(t, x, Order::grad).grad;
}
Sym2 FlowSolution::hess(double t, const TorusPoint &x) const {
  return eval(t, x, Order::hess).hess;
}
Jet FlowSolution::jet(double t, const TorusPoint &x) const { return eval(t, x, Order::hess); }

void FlowSolution::save(const std::string &dir) const {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  nlohmann::json manifest;
  manifest["n"] = n();
  manifest["l"] = L();
  manifest["dt_solver"] = dt_solver_;
  manifest["times"] = times_;
  std::vector<std::string> files;
  for (std::size_t k = 0; k < times_.size(); ++k) {
    char name[32];
    std::snprintf(name, sizeof name, "field_%05zu.csv", k);
    write_grid_csv(fields_[k], times_[k], (fs::path(dir) / name).string());
    files.emplace_back(name);
  }
  manifest["files"] = files;
  std::ofstream os(fs::path(dir) / "manifest.json");
  os << manifest.dump(2) << '\n';
}

FlowSolution FlowSolution::load(const std::string &dir) {
  namespace fs = std::filesystem;
  std::ifstream is(fs::path(dir) / "manifest.json");
  if (!is) throw std::runtime_error("missing manifest.json in " + dir);
  const auto manifest = nlohmann::json::parse(is);
  std::vector<double> times;
  std::vector<GridField> fields;
  for (const auto &name : manifest.at("files")) {
    double t = 0.0;
    fields.push_back(read_grid_csv((fs::path(dir) / name.get<std::string>()).string(), &t));
    times.push_back(t);
  }
  return FlowSolution(std::move(times), std::move(fields), manifest.at("dt_solver").get<double>());
}

double cfl_limit(const GridField &p0) {
  return 0.2 * p0.h() * p0.h() * std::exp(2.0 * p0.min());
}

void euler_step(GridField &p, double dt) {
  const GridField lap = laplacian(p);
  auto &v = p.values();
  const auto &l = lap.values();
  for (std::size_t k = 0; k < v.size(); ++k) {
    const double u = std::exp(2.0 * v[k]) + 2.0 * dt * l[k];
    if (!(u > 0.0) || !std::isfinite(u)) throw std::runtime_error("solver diverged");
    v[k] = 0.5 * std::log(u);
  }
}

FlowSolution solve(const GridField &p0, double T, double dt, double save_every) {
  if (!(T > 0.0)) throw std::invalid_argument("horizon must be positive");
  if (!(dt > 0.0) || !(save_every > 0.0)) throw std::invalid_argument("steps must be positive");
  const double L2 = p0.L() * p0.L();
  if (std::abs(area(p0) / L2 - 1.0) > 1e-9) {
    throw std::invalid_argument("initial data not area-normalized");
  }
  if (dt > cfl_limit(p0)) throw std::invalid_argument("dt exceeds CFL bound");
  const double saves_real = T / save_every;
  const long saves = std::lround(saves_real);
  if (saves < 1 || std::abs(saves_real - static_cast<double>(saves)) > 1e-9 * saves_real) {
    throw std::invalid_argument("horizon must be a multiple of the save interval");
  }
  const long substeps = static_cast<long>(std::ceil(save_every / dt - 1e-9));
  const double step = save_every / static_cast<double>(substeps);

  std::vector<double> times{0.0};
  std::vector<GridField> fields{p0};
  GridField p = p0;
  for (long s = 1; s <= saves; ++s) {
    for (long k = 0; k < substeps; ++k) euler_step(p, step);
    times.push_back(static_cast<double>(s) * save_every);
    fields.push_back(p);
  }
  return FlowSolution(std::move(times), std::move(fields), step);
}

SupNorms sup_norms(const GridField &f) {
  const long n = static_cast<long>(f.n());
  const double h = f.h();
  SupNorms s;
  for (long i = 0; i < n; ++i) {
    for (long j = 0; j < n; ++j) {
      const double c = f.at(i, j);
      const double gx = (f.at(i + 1, j) - f.at(i - 1, j)) / (2 * h);
      const double gy = (f.at(i, j + 1) - f.at(i, j - 1)) / (2 * h);
      const double hxx = (f.at(i + 1, j) - 2 * c + f.at(i - 1, j)) / (h * h);
      const double hyy = (f.at(i, j + 1) - 2 * c + f.at(i, j - 1)) / (h * h);
      const double hxy = (f.at(i + 1, j + 1) - f.at(i + 1, j - 1) - f.at(i - 1, j + 1) +
                          f.at(i - 1, j - 1)) /
                         (4 * h * h);
      s.p_inf = std::max(s.p_inf, std::abs(c));
      s.grad_inf = std::max(s.grad_inf, std::hypot(gx, gy));
      s.hess_inf = std::max(s.hess_inf, std::sqrt(hxx * hxx + 2 * hxy * hxy + hyy * hyy));
    }
  }
  return s;
}

SupNorms sup_norms(const FlowSolution &sol, double t) { return sup_norms(sol.snapshot(t)); }

double second_difference_quotient(const FlowSolution &sol, double t, const TorusPoint &z,
                                  const TangentVec &xi, double rho0) {
  if (!(rho0 > 0.0) || !(rho0 < sol.L() / 4)) throw std::invalid_argument("offset out of range");
  const TorusPoint zm = offset_point(z, xi, -rho0, sol.L());
  const TorusPoint zp = offset_point(z, xi, rho0, sol.L());
  return (sol.value(t, zm) - 2.0 * sol.value(t, z) + sol.value(t, zp)) / (rho0 * rho0);
}

}  // namespace rflab
