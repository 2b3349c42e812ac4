#include <algorithm>
#include <set>
#include <string>

#include "doctest.h"
#include "rflab/config.hpp"
#include "rflab/experiments.hpp"
#include "rflab/parallel.hpp"

using namespace rflab;

TEST_CASE("config files parse key=value lines with comments") {
  const Config cfg = Config::parse("# header\nexperiment = stationarity\n\n n=32  # grid\nseed=17\nx0 = 0.1, 0.2\n");
  CHECK(cfg.get_string("experiment", "") == "stationarity");
  CHECK(cfg.get_int("n", 0) == 32);
  CHECK(cfg.get_u64("seed", 0) == 17u);
  CHECK(cfg.get_list("x0", {}) == std::vector<double>{0.1, 0.2});
  CHECK(cfg.get_real("dt_sde", 3.5) == 3.5);
}

TEST_CASE("config errors name the field and line") {
  try {
    Config::parse("n = 64\ndt_sde = -1e-4\n");
    FAIL("expected a config error");
  } catch (const ConfigError &e) {
    CHECK(e.field() == "dt_sde");
    CHECK(e.line() == 2);
    CHECK(std::string(e.what()).find("dt_sde") != std::string::npos);
  }
  CHECK_THROWS_AS(Config::parse("bogus = 1\n"), ConfigError);
  CHECK_THROWS_AS(Config::parse("n 64\n"), ConfigError);
  CHECK_THROWS_AS(Config::parse("m = 2.5\n"), ConfigError);
  CHECK_THROWS_AS(Config::parse("r = 2\n"), ConfigError);
  CHECK_THROWS_AS(Config::parse("preset = square\n"), ConfigError);
  CHECK_THROWS_AS(Config::parse("mode = sphere\n"), ConfigError);
  CHECK_THROWS_AS(Config::parse("seed = -3\n"), ConfigError);
}

TEST_CASE("overrides replace file values and are validated") {
  Config cfg = Config::parse("m = 100\n");
  cfg.set("m=200");
  CHECK(cfg.get_int("m", 0) == 200);
  CHECK_THROWS_AS(cfg.set("m=0"), ConfigError);
  CHECK_THROWS_AS(cfg.set("m"), ConfigError);
}

TEST_CASE("experiment config enforces preset or file and grid size") {
  CHECK_THROWS_AS(ExperimentConfig::from(Config::parse("preset = sin1\nfile = p.csv\n")), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::from(Config::parse("preset = custom-file\n")), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::from(Config::parse("n = 48\n")), ConfigError);
  const ExperimentConfig e = ExperimentConfig::from(Config::parse("file = p.csv\nm = 10\n"));
  CHECK(e.preset == "custom-file");
  CHECK(e.M == std::optional<std::size_t>(10));
}

TEST_CASE("registry covers every criterion once, sorted by name") {
  const auto &reg = experiment_registry();
  CHECK(reg.size() >= 12);
  std::set<int> criteria;
  for (std::size_t k = 0; k < reg.size(); ++k) {
    CHECK_FALSE(reg[k].anchor.empty());
    CHECK_FALSE(reg[k].description.empty());
    CHECK(criteria.insert(reg[k].criterion).second);
    if (k > 0) CHECK(reg[k - 1].name < reg[k].name);
  }
  CHECK(criteria.size() == 17);
  CHECK(*criteria.begin() == 1);
  CHECK(*criteria.rbegin() == 17);
  CHECK(find_experiment("stationarity") != nullptr);
  CHECK(find_experiment("nonexistent") == nullptr);
}

TEST_CASE("tables render with a commented header") {
  const Table t{"demo", {"a", "b"}, {{1.0, 2.5}, {3.0, -0.125}}};
  CHECK(t.to_csv() == "# a,b\n1,2.5\n3,-0.125\n");
}

TEST_CASE("stochastic experiment tables are byte-identical across runs and worker counts") {
  Config cfg = Config::parse("m = 3000\nseed = 5\n");
  const Experiment *e = find_experiment("mirror_drift");
  REQUIRE(e != nullptr);
  set_worker_count(1);
  const Verdict a = run_experiment(*e, cfg);
  set_worker_count(4);
  const Verdict b = run_experiment(*e, cfg);
  set_worker_count(1);
  REQUIRE(a.tables.size() == b.tables.size());
  for (std::size_t k = 0; k < a.tables.size(); ++k) CHECK(a.tables[k].to_csv() == b.tables[k].to_csv());
  CHECK(a.summary == b.summary);
}

TEST_CASE("deterministic experiments pass") {
  for (const char *name : {"stationarity", "laplacian_eigen", "barrier_ode", "hitting_formulas", "jacobi_layer"}) {
    const Verdict v = run_experiment(*find_experiment(name), Config{});
    CHECK_MESSAGE(v.passed, name << ": " << v.summary);
    CHECK(v.name == name);
  }
}
