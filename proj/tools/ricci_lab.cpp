#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "rflab/analysis.hpp"
#include "rflab/barriers.hpp"
#include "rflab/config.hpp"
#include "rflab/coupling.hpp"
#include "rflab/experiments.hpp"
#include "rflab/flow.hpp"
#include "rflab/parallel.hpp"
#include "rflab/rng.hpp"
#include "rflab/target.hpp"
#include "rflab/triple.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace rflab;

namespace {

constexpr int kExitPass = 0;
constexpr int kExitFail = 1;
constexpr int kExitUsage = 2;

struct Globals {
  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<unsigned> threads;
};

/// Settings from the config file, then --set overrides, then subcommand flags, then globals.
Config assemble(const Globals &g, const std::vector<std::pair<std::string, std::string>> &flags) {
  Config cfg = g.config_path.empty() ? Config{} : Config::load(g.config_path);
  for (const auto &o : g.overrides) cfg.set(o);
  for (const auto &[k, v] : flags) cfg.set(k, v);
  if (g.seed) cfg.set("seed", std::to_string(*g.seed));
  if (g.out) cfg.set("out", *g.out);
  if (g.threads) cfg.set("threads", std::to_string(*g.threads));
  if (cfg.has("threads")) set_worker_count(static_cast<unsigned>(cfg.get_int("threads", 1)));
  (void)ExperimentConfig::from(cfg);
  return cfg;
}

std::string out_dir(const Config &cfg) { return cfg.get_string("out", "ricci_lab_out"); }

void write_text(const fs::path &path, const std::string &text) {
  fs::create_directories(path.parent_path());
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << text;
}

std::string timestamp() {
  const std::time_t now = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  return buf;
}

json config_echo(const Config &cfg) {
  json echo = json::object();
  for (const auto &[k, v] : cfg.values()) echo[k] = v;
  return echo;
}

json verdict_json(const Verdict &v) {
  return {{"name", v.name},       {"criterion", v.criterion}, {"passed", v.passed},
          {"summary", v.summary}, {"metrics", v.metrics},     {"wall_time_seconds", v.seconds}};
}

void write_manifest(const Config &cfg, const std::vector<Verdict> &verdicts, double seconds) {
  json manifest = {{"config", config_echo(cfg)},
                   {"git_describe", build_describe()},
                   {"wall_time_seconds", seconds},
                   {"timestamp", timestamp()},
                   {"verdicts", json::array()}};
  for (const auto &v : verdicts) manifest["verdicts"].push_back(verdict_json(v));
  write_text(fs::path(out_dir(cfg)) / "manifest.json", manifest.dump(2) + "\n");
}

int with_manifest(const Config &cfg, int (*command)(const Config &)) {
  const auto start = std::chrono::steady_clock::now();
  const int code = command(cfg);
  write_manifest(cfg, {},
                 std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
  return code;
}

int run_verdicts(const Config &cfg, const std::vector<const Experiment *> &experiments) {
  const auto start = std::chrono::steady_clock::now();
  std::vector<Verdict> verdicts;
  bool all = true;
  for (const Experiment *e : experiments) {
    Verdict v = run_experiment(*e, cfg);
    for (const auto &t : v.tables) write_text(fs::path(out_dir(cfg)) / (t.name + ".csv"), t.to_csv());
    std::cout << (v.passed ? "PASS " : "FAIL ") << std::setw(2) << v.criterion << ' ' << v.name
              << ": " << v.summary << '\n';
    all = all && v.passed;
    verdicts.push_back(std::move(v));
  }
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  write_manifest(cfg, verdicts, seconds);
  if (!all) {
    json block = json::array();
    for (const auto &v : verdicts)
      if (!v.passed) block.push_back(verdict_json(v));
    std::cerr << json{{"failed", block}}.dump() << '\n';
  }
  return all ? kExitPass : kExitFail;
}

TorusPoint point_from(const Config &cfg, const std::string &key, TorusPoint fallback) {
  const auto v = cfg.get_list(key, {fallback.x1, fallback.x2});
  if (v.size() != 2) throw ConfigError(key, "expected two coordinates");
  return wrap(v[0], v[1]);
}

std::shared_ptr<const FlowSolution> flow_from(const Config &cfg, double T) {
  const ExperimentConfig e = ExperimentConfig::from(cfg);
  const double save = cfg.get_real("save_every", 5e-4);
  if (e.preset == "custom-file" || e.dt_pde || e.L != 1.0) {
    const GridField p0 = make_initial(e.preset, e.n, e.L, e.file);
    const double dt = e.dt_pde.value_or(cfl_limit(p0));
    return std::make_shared<FlowSolution>(solve(p0, T, dt, save));
  }
  return cached_flow(e.preset, e.n, T, save);
}

int cmd_solve(const Config &cfg) {
  const double T = cfg.get_real("t", 0.25);
  const auto sol = flow_from(cfg, T);
  const fs::path dir = fs::path(out_dir(cfg)) / "flow";
  fs::create_directories(dir);
  sol->save(dir.string());
  Table table{"solve", {"t", "p_inf", "grad_inf", "hess_inf", "oscillation", "area"}, {}};
  for (std::size_t k = 0; k < sol->times().size(); ++k) {
    const SupNorms s = sup_norms(sol->fields()[k]);
    table.rows.push_back({sol->times()[k], s.p_inf, s.grad_inf, s.hess_inf,
                          oscillation(sol->fields()[k]), area(sol->fields()[k])});
  }
  write_text(fs::path(out_dir(cfg)) / "solve.csv", table.to_csv());
  std::cout << table.to_csv();
  return kExitPass;
}

int cmd_barrier(const Config &cfg) {
  const int r = static_cast<int>(cfg.get_int("r", 0));
  Table table;
  if (cfg.get_string("bounds", "no") == "yes") {
    const double alpha = cfg.get_real("alpha", 0.3), beta = cfg.get_real("beta", -0.3);
    const double tmax = cfg.get_real("tau_max", 2.0);
    const long points = cfg.get_int("points", 100);
    table = {"barrier_bounds", {"t", "upper", "lower"}, {}};
    for (long k = 1; k <= points; ++k) {
      const double t = tmax * static_cast<double>(k) / static_cast<double>(points);
      const BoundPair b = reachable_bounds(r, alpha, beta, t);
      table.rows.push_back({t, b.upper.is_finite() ? b.upper.value : std::nan(""),
                            b.lower.is_finite() ? b.lower.value : std::nan("")});
    }
  } else {
    const BarrierParams bp{r, cfg.get_real("c", 0.5)};
    const double tmax = cfg.get_real("tau_max", 2.0);
    const long points = cfg.get_int("points", 100);
    table = {"barrier", {"tau", "b_value"}, {}};
    for (long k = 0; k < points; ++k) {
      const double tau = tmax * static_cast<double>(k) / static_cast<double>(points - 1);
      table.rows.push_back({tau, barrier_value(bp, tau)});
    }
  }
  write_text(fs::path(out_dir(cfg)) / (table.name + ".csv"), table.to_csv());
  std::cout << table.to_csv();
  return kExitPass;
}

int cmd_target(const Config &cfg) {
  const double t = cfg.get_real("t", 0.25);
  const auto sol = flow_from(cfg, t);
  const TorusPoint x0 = point_from(cfg, "x0", {0.3, 0.4});
  const std::size_t M = static_cast<std::size_t>(cfg.get_int("m", 20000));
  const double dt = cfg.get_real("dt_sde", 1e-4);
  const std::uint64_t seed = cfg.get_u64("seed", 20240601);
  const Control control = successful_control(*sol, t);
  std::vector<double> terminal(M), devs(M);
  std::vector<TorusPoint> ends(M);
  parallel_for(M, [&](std::size_t i) {
    RngStream rng(seed, i);
    const ControlledPath path = simulate_controlled(sol.get(), t, x0, control, dt, rng);
    terminal[i] = sol->value(0.0, path.terminal_x);
    devs[i] = path.on_section_max_dev;
    ends[i] = path.terminal_x;
  });
  const MCEstimate e = mc_reduce(terminal);
  const json summary = {{"estimate", e.mean},
                        {"std_error", e.std_error},
                        {"pde_value", sol->value(t, x0)},
                        {"max_dev", *std::max_element(devs.begin(), devs.end())}};
  write_text(fs::path(out_dir(cfg)) / "target.json", summary.dump(2) + "\n");
  if (cfg.has("paths_csv")) {
    Table paths{"paths", {"path", "terminal_x1", "terminal_x2", "p0_terminal", "on_section_max_dev"}, {}};
    for (std::size_t i = 0; i < M; ++i)
      paths.rows.push_back({static_cast<double>(i), ends[i].x1, ends[i].x2, terminal[i], devs[i]});
    write_text(cfg.get_string("paths_csv", ""), paths.to_csv());
  }
  std::cout << summary.dump(2) << '\n';
  return kExitPass;
}

int cmd_couple(const Config &cfg) {
  const std::vector<double> s_grid = cfg.get_list("s_grid", {0.0025, 0.005, 0.01, 0.02});
  double s_max = 0.0;
  for (double s : s_grid) s_max = std::max(s_max, s);
  const double t = cfg.get_real("t", std::max(0.25, s_max));
  const auto sol = flow_from(cfg, t);
  const double rho0 = cfg.get_real("rho0", 0.05);
  const TorusPoint x0 = point_from(cfg, "x0", {0.3, 0.4});
  const TorusPoint y0 = cfg.has("y0") ? point_from(cfg, "y0", {}) : wrap(x0.x1 + rho0, x0.x2);
  const std::size_t M = static_cast<std::size_t>(cfg.get_int("m", 10000));
  const double dt = cfg.get_real("dt_sde", 1e-5);
  const SurvivalCurve c = coupling_survival(*sol, t, x0, y0, M, dt, cfg.get_u64("seed", 20240601), s_grid);
  const double delta = cfg.get_real("delta", 1.0);
  const double rho = torus_geodesic(x0, y0).distance;
  const double D = cfg.get_real("d", rho * rho / 4.0);
  Table table{"couple", {"s", "survival", "std_error", "bessel_bound"}, {}};
  for (std::size_t k = 0; k < c.s_grid.size(); ++k)
    table.rows.push_back({c.s_grid[k], c.survival[k], c.std_error[k], bessel_survival_bound(delta, D, c.s_grid[k])});
  write_text(fs::path(out_dir(cfg)) / "couple.csv", table.to_csv());
  std::cout << table.to_csv();
  return kExitPass;
}

int cmd_triple(const Config &cfg) {
  TripleRunSpec spec;
  spec.cfg.r = static_cast<int>(cfg.get_int("r", 0));
  spec.cfg.mode = cfg.get_string("mode", "torus") == "scalar" ? TripleMode::scalar : TripleMode::torus;
  spec.cfg.r0 = cfg.get_real("r0", 0.2);
  spec.rho0 = cfg.get_real("rho0", 0.1);
  spec.M = static_cast<std::size_t>(cfg.get_int("m", 2000));
  spec.dt = cfg.get_real("dt_sde", 1e-4);
  spec.horizon = cfg.get_real("t_obs", 0.05);
  spec.seed = cfg.get_u64("seed", 20240601);
  spec.x0 = point_from(cfg, "x0", spec.x0);
  std::shared_ptr<const FlowSolution> sol;
  double t = 0.0;
  if (spec.cfg.mode == TripleMode::torus) {
    t = cfg.get_real("t", std::max(0.25, spec.horizon));
    sol = flow_from(cfg, t);
  }
  const std::size_t n_check = 4;
  Table table{"triple", {"tau", "mean_rho1", "mean_rho2", "alive_fraction", "max_sum_deviation"}, {}};
  for (std::size_t k = 1; k <= n_check; ++k) {
    TripleRunSpec part = spec;
    part.horizon = spec.horizon * static_cast<double>(k) / n_check;
    const TerminalSamples ts = triple_terminal_samples(sol.get(), t, part);
    const SumIdentityResult sr = sum_identity_run(sol.get(), t, part);
    double m1 = 0.0, m2 = 0.0;
    for (std::size_t i = 0; i < ts.rho1.size(); ++i) {
      m1 += ts.rho1[i] / static_cast<double>(ts.rho1.size());
      m2 += ts.rho2[i] / static_cast<double>(ts.rho2.size());
    }
    table.rows.push_back({part.horizon, m1, m2,
                          static_cast<double>(ts.rho1.size()) / static_cast<double>(spec.M), sr.max_deviation});
  }
  const SumIdentityResult sr = sum_identity_run(sol.get(), t, spec);
  const KsResult ks = symmetry_test(sol.get(), t, spec);
  const bool passed = sr.antisymmetry_exact && ks.p_value > 0.01;
  const json verdict = {{"mode", to_string(spec.cfg.mode)},
                        {"max_sum_deviation", sr.max_deviation},
                        {"antisymmetry_exact", sr.antisymmetry_exact},
                        {"ks_statistic", ks.statistic},
                        {"ks_p_value", ks.p_value},
                        {"passed", passed}};
  write_text(fs::path(out_dir(cfg)) / "triple.csv", table.to_csv());
  write_text(fs::path(out_dir(cfg)) / "triple.json", verdict.dump(2) + "\n");
  std::cout << table.to_csv() << verdict.dump(2) << '\n';
  return passed ? kExitPass : kExitFail;
}

int cmd_decay(const Config &cfg) {
  const double T = cfg.get_real("t", 0.2);
  const auto sol = flow_from(cfg, T);
  std::vector<double> ts, c0, c1, c2;
  Table table{"decay", {"t", "p_inf", "grad_inf", "hess_inf"}, {}};
  for (std::size_t k = 0; k < sol->times().size(); ++k) {
    const SupNorms s = sup_norms(sol->fields()[k]);
    table.rows.push_back({sol->times()[k], s.p_inf, s.grad_inf, s.hess_inf});
    if (sol->times()[k] <= 0.0) continue;
    ts.push_back(sol->times()[k]);
    c0.push_back(s.p_inf);
    c1.push_back(s.grad_inf);
    c2.push_back(s.hess_inf);
  }
  json fits = json::object();
  const std::pair<const char *, const std::vector<double> *> series[] = {{"c0", &c0}, {"c1", &c1}, {"c2", &c2}};
  for (const auto &[label, ys] : series) {
    const DecayFit f = fit_exponential(ts, *ys);
    fits[label] = {{"rate", f.rate}, {"r_squared", f.r_squared}, {"n_points", f.n_points}};
  }
  write_text(fs::path(out_dir(cfg)) / "decay.csv", table.to_csv());
  write_text(fs::path(out_dir(cfg)) / "decay.json", fits.dump(2) + "\n");
  std::cout << table.to_csv() << fits.dump(2) << '\n';
  return kExitPass;
}

int cmd_list() {
  for (const auto &e : experiment_registry())
    std::cout << std::left << std::setw(24) << e.name << ' ' << std::setw(2) << e.criterion << "  "
              << e.description << "  [" << e.anchor << "]\n";
  return kExitPass;
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"Numerical laboratory for the normalized Ricci flow on the flat torus"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config_path, "key=value configuration file")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "root seed");
  app.add_option("--out", g.out, "output directory");
  app.add_option("--threads", g.threads, "worker threads")->check(CLI::PositiveNumber);
  app.add_option("--set", g.overrides, "configuration override key=value (repeatable)");

  std::vector<std::pair<std::string, std::string>> flags;
  auto flag = [&flags](CLI::App *sub, const std::string &name, const std::string &key,
                       const std::string &help) {
    sub->add_option_function<std::string>(
        name, [&flags, key](const std::string &v) { flags.emplace_back(key, v); }, help);
  };
  auto field_flags = [&](CLI::App *sub) {
    flag(sub, "--preset", "preset", "initial data: zero | sin1 | sin2d | custom-file");
    flag(sub, "--file", "file", "initial grid CSV for preset custom-file");
    flag(sub, "--n", "n", "grid size (power of two)");
    flag(sub, "--t", "t", "flow horizon");
    flag(sub, "--dt-pde", "dt_pde", "PDE time step");
    flag(sub, "--save-every", "save_every", "snapshot spacing");
  };

  auto *solve_cmd = app.add_subcommand("solve", "integrate the flow and save snapshots");
  field_flags(solve_cmd);

  auto *barrier_cmd = app.add_subcommand("barrier", "tabulate a barrier curve or the reachable-set bounds");
  flag(barrier_cmd, "--r", "r", "curvature sign");
  flag(barrier_cmd, "--c", "c", "barrier constant");
  flag(barrier_cmd, "--tau-max", "tau_max", "end of the tau grid");
  flag(barrier_cmd, "--points", "points", "grid points");
  flag(barrier_cmd, "--alpha", "alpha", "upper initial bound");
  flag(barrier_cmd, "--beta", "beta", "lower initial bound");
  barrier_cmd->add_flag_callback("--bounds", [&flags] { flags.emplace_back("bounds", "yes"); },
                                 "emit (t, upper, lower) instead of one curve");

  auto *target_cmd = app.add_subcommand("target", "Monte Carlo representation of the flow at a point");
  field_flags(target_cmd);
  flag(target_cmd, "--dt", "dt_sde", "SDE time step");
  flag(target_cmd, "--m", "m", "path count");
  flag(target_cmd, "--x0", "x0", "query point x1,x2");
  flag(target_cmd, "--paths-csv", "paths_csv", "optional per-path CSV");

  auto *couple_cmd = app.add_subcommand("couple", "mirror-coupling survival curve");
  field_flags(couple_cmd);
  flag(couple_cmd, "--rho0", "rho0", "initial distance");
  flag(couple_cmd, "--s-grid", "s_grid", "comma-separated s values");
  flag(couple_cmd, "--m", "m", "path count");
  flag(couple_cmd, "--dt", "dt_sde", "SDE time step");
  flag(couple_cmd, "--x0", "x0", "first start point");
  flag(couple_cmd, "--y0", "y0", "second start point");
  flag(couple_cmd, "--delta", "delta", "Bessel dimension for the bound column");
  flag(couple_cmd, "--d", "d", "Bessel scale D for the bound column");

  auto *triple_cmd = app.add_subcommand("triple", "triple coupling run with symmetry verdict");
  field_flags(triple_cmd);
  flag(triple_cmd, "--r", "r", "curvature sign");
  flag(triple_cmd, "--rho0", "rho0", "initial distance");
  flag(triple_cmd, "--r0", "r0", "stopping distance");
  flag(triple_cmd, "--m", "m", "path count");
  flag(triple_cmd, "--dt", "dt_sde", "SDE time step");
  flag(triple_cmd, "--t-obs", "t_obs", "observation time");
  flag(triple_cmd, "--mode", "mode", "torus | scalar");

  auto *decay_cmd = app.add_subcommand("decay", "sup-norm decay of p and its derivatives");
  field_flags(decay_cmd);

  auto *list_cmd = app.add_subcommand("list", "list registered experiments");
  auto *all_cmd = app.add_subcommand("all", "run every registered experiment");
  auto *run_cmd = app.add_subcommand("run", "run one registered experiment");
  flag(run_cmd, "--experiment", "experiment", "experiment name");
  flag(run_cmd, "--m", "m", "path count");
  flag(run_cmd, "--dt", "dt_sde", "SDE time step");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? kExitPass : kExitUsage;
  }

  try {
    if (list_cmd->parsed()) return cmd_list();
    const Config cfg = assemble(g, flags);
    if (solve_cmd->parsed()) return with_manifest(cfg, cmd_solve);
    if (barrier_cmd->parsed()) return with_manifest(cfg, cmd_barrier);
    if (target_cmd->parsed()) return with_manifest(cfg, cmd_target);
    if (couple_cmd->parsed()) return with_manifest(cfg, cmd_couple);
    if (triple_cmd->parsed()) return with_manifest(cfg, cmd_triple);
    if (decay_cmd->parsed()) return with_manifest(cfg, cmd_decay);
    if (all_cmd->parsed()) {
      std::vector<const Experiment *> all;
      for (const auto &e : experiment_registry()) all.push_back(&e);
      return run_verdicts(cfg, all);
    }
    if (run_cmd->parsed()) {
      const std::string name = cfg.get_string("experiment", "");
      const Experiment *e = find_experiment(name);
      if (!e) {
        std::cerr << "error: unknown experiment '" << name << "' (see `ricci_lab list`)\n";
        return kExitUsage;
      }
      return run_verdicts(cfg, {e});
    }
  } catch (const ConfigError &e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::invalid_argument &e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFail;
  }
  return kExitUsage;
}
