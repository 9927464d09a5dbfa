#pragma once

// Statistics over busy-period records.
//
// Periods are i.i.d. regeneration cycles, so everything here is classical:
// sample means with normal CIs, ratio estimators via the delta method, and
// a batch-median variant for quantities whose distribution is too heavy
// for a plain CI to be trustworthy at realistic n.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "mg1/simulator.hpp"

namespace mg1 {

// Acklam's rational approximation to the standard normal quantile, with
// one Halley refinement off erfc to reach full double precision.
inline double inverse_normal(double p) {
  if (!(p > 0.0 && p < 1.0))
    throw std::domain_error("inverse_normal: p must lie in (0,1)");
  static constexpr double A[6] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                  -2.759285104469687e+02, 1.383577518672690e+02,
                                  -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double B[5] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                  -1.556989798598866e+02, 6.680131188771972e+01,
                                  -1.328068155288572e+01};
  static constexpr double C[6] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                  -2.400758277161838e+00, -2.549732539343734e+00,
                                  4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double Dd[4] = {7.784695709041462e-03, 3.224671290700398e-01,
                                   2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;
  double x;
  if (p < p_low) {
    double q = std::sqrt(-2.0 * std::log(p));
    x = (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5]) /
        ((((Dd[0] * q + Dd[1]) * q + Dd[2]) * q + Dd[3]) * q + 1.0);
  } else if (p <= 1.0 - p_low) {
    double q = p - 0.5, r = q * q;
    x = (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) *
        q /
        (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0);
  } else {
    double q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5]) /
        ((((Dd[0] * q + Dd[1]) * q + Dd[2]) * q + Dd[3]) * q + 1.0);
  }
  // Halley step: e is the CDF error at x.
  double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - p;
  double u = e * 2.5066282746310002 * std::exp(x * x / 2.0);  // sqrt(2 pi)
  return x - u / (1.0 + x * u / 2.0);
}

inline double z_two_sided(double confidence) {
  return inverse_normal(0.5 + confidence / 2.0);
}
inline double z_one_sided(double confidence) {
  return inverse_normal(confidence);
}

struct Estimate {
  double mean = 0;
  double se = 0;       // standard error of the mean
  double ci_half = 0;  // two-sided half width at the requested confidence
  std::size_t n = 0;   // records entering the mean
  double lo() const { return mean - ci_half; }
  double hi() const { return mean + ci_half; }
};

namespace detail {

inline Estimate from_samples(const std::vector<double>& xs,
                             double confidence) {
  Estimate e;
  e.n = xs.size();
  if (e.n == 0) throw std::invalid_argument("estimate: no samples");
  double sum = 0;
  for (double x : xs) sum += x;
  e.mean = sum / static_cast<double>(e.n);
  if (e.n > 1) {
    double ss = 0;
    for (double x : xs) {
      double d = x - e.mean;
      ss += d * d;
    }
    e.se = std::sqrt(ss / (static_cast<double>(e.n) *
                           static_cast<double>(e.n - 1)));
  }
  e.ci_half = z_two_sided(confidence) * e.se;
  return e;
}

}  // namespace detail

// Mean of f(record) across all periods.
template <class F>
Estimate regen_mean(const std::vector<BusyPeriodRecord>& rs, F f,
                    double confidence = 0.99) {
  std::vector<double> xs;
  xs.reserve(rs.size());
  for (const auto& r : rs) xs.push_back(static_cast<double>(f(r)));
  return detail::from_samples(xs, confidence);
}

// Mean of f(record) over periods selected by pred.  Refuses to produce a
// number from too few qualifying periods -- a CI on a handful of rare
// events is noise dressed up as precision.
template <class P, class F>
Estimate conditional_mean(const std::vector<BusyPeriodRecord>& rs, P pred,
                          F f, double confidence = 0.99,
                          std::size_t min_count = 100) {
  std::vector<double> xs;
  for (const auto& r : rs)
    if (pred(r)) xs.push_back(static_cast<double>(f(r)));
  if (xs.size() < min_count)
    throw std::runtime_error(
        "conditional_mean: too few qualifying periods (" +
        std::to_string(xs.size()) + " < " + std::to_string(min_count) + ")");
  return detail::from_samples(xs, confidence);
}

// Ratio estimator sum(num)/sum(den) with a delta-method standard error:
//   se ~ sd(num_i - R den_i) / (mean(den) sqrt(n)).
// This is the right shape for per-job means, which are per-period sums
// divided by per-period job counts.
template <class FN, class FD>
Estimate ratio_mean(const std::vector<BusyPeriodRecord>& rs, FN num, FD den,
                    double confidence = 0.99) {
  const std::size_t n = rs.size();
  if (n == 0) throw std::invalid_argument("ratio_mean: no samples");
  double sy = 0, sd = 0;
  for (const auto& r : rs) {
    sy += static_cast<double>(num(r));
    sd += static_cast<double>(den(r));
  }
  if (sd == 0) throw std::invalid_argument("ratio_mean: zero denominator");
  Estimate e;
  e.n = n;
  e.mean = sy / sd;
  if (n > 1) {
    const double dbar = sd / static_cast<double>(n);
    double ss = 0;
    for (const auto& r : rs) {
      double d = static_cast<double>(num(r)) -
                 e.mean * static_cast<double>(den(r));
      ss += d * d;
    }
    e.se = std::sqrt(ss / static_cast<double>(n - 1)) /
           (dbar * std::sqrt(static_cast<double>(n)));
  }
  e.ci_half = z_two_sided(confidence) * e.se;
  return e;
}

// Median of batch means.  For heavy-tailed per-period quantities the
// sample mean is dragged around by the largest observation; the median of
// 32 batch means converges far faster and still targets the same limit.
template <class F>
double batch_means_median(const std::vector<BusyPeriodRecord>& rs, F f,
                          std::size_t n_batches = 32) {
  if (n_batches == 0 || rs.size() < n_batches)
    throw std::invalid_argument("batch_means_median: need >= one record per batch");
  std::vector<double> means(n_batches, 0.0);
  const std::size_t n = rs.size();
  for (std::size_t b = 0; b < n_batches; ++b) {
    const std::size_t lo = b * n / n_batches;
    const std::size_t hi = (b + 1) * n / n_batches;
    double s = 0;
    for (std::size_t i = lo; i < hi; ++i)
      s += static_cast<double>(f(rs[i]));
    means[b] = s / static_cast<double>(hi - lo);
  }
  std::sort(means.begin(), means.end());
  const std::size_t m = n_batches / 2;
  return (n_batches % 2 == 1) ? means[m]
                              : 0.5 * (means[m - 1] + means[m]);
}

// One-sided test of "true mean <= bound" at the given confidence: passes
// unless even the lower confidence limit sits above the bound.
struct BoundCheck {
  bool pass = false;
  double lower = 0;   // one-sided lower confidence limit
  double margin = 0;  // bound - point estimate (negative: estimate above)
};

inline BoundCheck check_upper(const Estimate& e, double bound,
                              double confidence = 0.99) {
  BoundCheck c;
  c.lower = e.mean - z_one_sided(confidence) * e.se;
  c.margin = bound - e.mean;
  c.pass = c.lower <= bound;
  return c;
}

// Per-job sojourn gap between two policies run under common random
// numbers.  The pairing is only valid if the workloads really were
// identical, which the simulator guarantees bitwise; trust but verify.
inline Estimate paired_gap_per_job(const std::vector<BusyPeriodRecord>& a,
                                   const std::vector<BusyPeriodRecord>& b,
                                   double confidence = 0.99) {
  if (a.size() != b.size() || a.empty())
    throw std::invalid_argument("paired_gap_per_job: mismatched batches");
  std::vector<BusyPeriodRecord> diff(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].W != b[i].W || a[i].N_B != b[i].N_B)
      throw std::logic_error(
          "paired_gap_per_job: periods are not coupled (workload differs)");
    diff[i].sum_sojourn = a[i].sum_sojourn - b[i].sum_sojourn;
    diff[i].N_B = a[i].N_B;
  }
  return ratio_mean(
      diff, [](const BusyPeriodRecord& r) { return r.sum_sojourn; },
      [](const BusyPeriodRecord& r) { return static_cast<double>(r.N_B); },
      confidence);
}

}  // namespace mg1
