#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"
#include "rflab/config.hpp"
#include "rflab/flow.hpp"

namespace rflab {

/// Area-normalized initial data for a named preset (zero, sin1, sin2d, custom-file).
GridField make_initial(const std::string &preset, std::size_t n, double L = 1.0,
                       const std::string &file = "", double amplitude = 0.2);

/// Flow solution for a preset, memoized for the lifetime of the process.
std::shared_ptr<const FlowSolution> cached_flow(const std::string &preset, std::size_t n,
                                                double T, double save_every,
                                                double amplitude = 0.2);

/// Column table rendered as CSV with a `#`-prefixed header line.
struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  std::string to_csv() const;
};

struct Verdict {
  std::string name;
  int criterion = 0;
  bool passed = false;
  std::string summary;
  nlohmann::json metrics = nlohmann::json::object();
  std::vector<Table> tables;
  double seconds = 0.0;
};

struct Experiment {
  std::string name;
  std::string description;
  std::string anchor;  // the result the experiment probes
  int criterion = 0;
  std::function<Verdict(const Config &)> run;
};

/// All registered experiments, sorted by name.
const std::vector<Experiment> &experiment_registry();
const Experiment *find_experiment(const std::string &name);

/// Runs one experiment, timing it and filling in name and criterion.
Verdict run_experiment(const Experiment &e, const Config &cfg);

/// Build identifier recorded in manifests.
std::string build_describe();

}  // namespace rflab
