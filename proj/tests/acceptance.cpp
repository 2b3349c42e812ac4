#include <algorithm>
#include <cstdio>
#include <vector>

#include "rflab/config.hpp"
#include "rflab/experiments.hpp"

using namespace rflab;

namespace {

// Wall-clock limit in seconds for each criterion, indexed by criterion number.
constexpr double kBudget[18] = {0,   5,   1,   30,  180, 180, 300, 10,  1,
                                60,  300, 1,   180, 180, 180, 1,   120, 180};

}  // namespace

int main() {
  std::vector<const Experiment *> order;
  for (const auto &e : experiment_registry()) order.push_back(&e);
  std::sort(order.begin(), order.end(),
            [](const Experiment *a, const Experiment *b) { return a->criterion < b->criterion; });
  const Config cfg;
  int failures = 0;
  for (const Experiment *e : order) {
    Verdict v;
    try {
      v = run_experiment(*e, cfg);
    } catch (const std::exception &ex) {
      v.name = e->name;
      v.criterion = e->criterion;
      v.summary = std::string("error: ") + ex.what();
    }
    const double budget = kBudget[e->criterion];
    const bool in_time = v.seconds <= budget;
    const bool ok = v.passed && in_time;
    if (!ok) ++failures;
    std::printf("%s criterion %2d %-24s %s [%.1fs of %.0fs%s]\n", ok ? "PASS" : "FAIL", e->criterion,
                e->name.c_str(), v.summary.c_str(), v.seconds, budget, in_time ? "" : ", over budget");
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(order.size()) - failures, order.size());
  return failures == 0 ? 0 : 1;
}
