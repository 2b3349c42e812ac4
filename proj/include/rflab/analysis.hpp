#pragma once

#include <cstddef>
#include <vector>

namespace rflab {

/// Fitted v(t) ~ exp(log_prefactor - rate * t).
struct DecayFit {
  double rate = 0.0;
  double log_prefactor = 0.0;
  double r_squared = 0.0;
  std::size_t n_points = 0;
};

/// Ordinary least squares on (t, log v) over the points with v > floor (at least 4).
DecayFit fit_exponential(const std::vector<double> &times, const std::vector<double> &values,
                         double floor = 1e-12);

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

/// Asymptotic Kolmogorov survival function Q(lambda) = P(K > lambda).
double kolmogorov_survival(double lambda);

/// Two-sample Kolmogorov-Smirnov test; both samples need at least 20 entries.
KsResult ks_two_sample(std::vector<double> a, std::vector<double> b);

struct MCEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t n_paths = 0;
};

/// Sample mean and standard error of the mean (n >= 2).
MCEstimate mc_reduce(const std::vector<double> &samples);

/// Observed convergence order log(e_coarse / e_fine) / log(h_coarse / h_fine).
double observed_order(double e_coarse, double e_fine, double h_coarse, double h_fine);

}  // namespace rflab
