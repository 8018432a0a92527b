#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "posi/errors.hpp"

namespace posi {

// Standard normal CDF.
inline double normal_cdf(double x) {
  return 0.5 * std::erfc(-x / std::sqrt(2.0));
}

// Standard normal quantile by bisection; plenty for test oracles and
// closed-form calibration targets (1e-13 absolute on the probability scale).
inline double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw argument_error("normal_quantile: p must lie in (0,1)");
  double lo = -40.0, hi = 40.0;
  for (int iter = 0; iter < 200; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (normal_cdf(mid) < p)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

// Empirical quantile used throughout: the ceil((1-alpha)*B)-th order statistic
// (1-indexed) of the sample, the standard conservative convention.
inline double order_statistic_quantile(std::vector<double> values, double alpha) {
  if (values.empty()) throw argument_error("order_statistic_quantile: empty sample");
  if (!(alpha > 0.0 && alpha < 1.0)) throw argument_error("order_statistic_quantile: alpha must lie in (0,1)");
  const auto b = static_cast<long>(values.size());
  long r = static_cast<long>(std::ceil((1.0 - alpha) * static_cast<double>(b) - 1e-12));
  r = std::clamp<long>(r, 1, b);
  std::nth_element(values.begin(), values.begin() + (r - 1), values.end());
  return values[static_cast<std::size_t>(r - 1)];
}

// Monte Carlo standard error of a binomial frequency estimate.
inline double coverage_standard_error(double freq, long reps) {
  if (reps <= 0) throw argument_error("coverage_standard_error: reps must be positive");
  const double f = std::clamp(freq, 0.0, 1.0);
  return std::sqrt(f * (1.0 - f) / static_cast<double>(reps));
}

// Slope of the least-squares line through (x_i, y_i); used for log-log rate
// diagnostics in the simulator.
inline double ols_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw argument_error("ols_slope: need two matched samples");
  const auto n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  if (sxx == 0.0) throw argument_error("ols_slope: degenerate abscissae");
  return sxy / sxx;
}

}  // namespace posi
