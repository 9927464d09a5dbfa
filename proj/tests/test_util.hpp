#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

namespace testutil {

inline double rel_err(double got, double want) {
  if (got == want) return 0.0;  // covers inf == inf and exact hits
  return std::abs(got - want) / std::max(std::abs(want), 1e-300);
}

// One-sample Kolmogorov-Smirnov statistic against a cdf.
inline double ks_statistic(std::vector<double> xs,
                           const std::function<double(double)>& cdf) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double fx = cdf(xs[i]);
    d = std::max(d, std::abs(fx - static_cast<double>(i) / n));
    d = std::max(d, std::abs(static_cast<double>(i + 1) / n - fx));
  }
  return d;
}

// Two-sample KS statistic.
inline double ks_two_sample(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    if (a[i] <= b[j])
      ++i;
    else
      ++j;
    const double fa = static_cast<double>(i) / a.size();
    const double fb = static_cast<double>(j) / b.size();
    d = std::max(d, std::abs(fa - fb));
  }
  return d;
}

// Asymptotic KS critical values at the 0.01 level.
inline double ks_crit_one(std::size_t n) {
  return 1.62762 / std::sqrt(static_cast<double>(n));
}
inline double ks_crit_two(std::size_t n, std::size_t m) {
  return 1.62762 * std::sqrt((n + m) / (static_cast<double>(n) * m));
}

}  // namespace testutil
