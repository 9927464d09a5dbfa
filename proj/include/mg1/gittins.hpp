#pragma once

// Gittins index machinery.  For a job with attained service a the index is
//
//   G(a) = sup_{delta>0} [F(a+delta) - F(a)] / int_a^{a+delta} S(t) dt
//
// i.e. the best completion-probability-per-expected-unit-of-work over all
// service quanta.  The sup is searched on a log-spaced delta grid; the
// quantum that reaches the support edge (for type-A truncations: the atom)
// is always included as an exact candidate.  Once no mass remains beyond a
// the index is reported as +inf.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "mg1/distribution.hpp"

namespace mg1 {

struct GittinsConfig {
  int n_delta = 64;       // log-spaced service quanta per attained point
  double grid_step = 0;   // table resolution; 0 = a_max/512
  double a_max = 0;       // table top; 0 = truncation point or 0.9999-quantile
};

inline double efficiency(const ServiceDistribution& d, double a,
                         double delta) {
  if (!(delta > 0)) throw std::domain_error("efficiency: delta must be > 0");
  const double sa = d.survival(a);
  if (!(sa > 0))
    throw std::domain_error("efficiency: no mass beyond attained service");
  const double num = sa - d.survival(a + delta);
  const double den = d.int_survival(a, a + delta);
  return num / den;
}

inline double gittins_index(const ServiceDistribution& d, double a,
                            const GittinsConfig& cfg = {}) {
  if (!(d.survival(a) > 0)) return kInf;  // only an atom (or nothing) left
  const double edge = d.right_edge();
  // Horizon for the sup: the support edge, or effectively-all of the mass
  // for unbounded families.
  double width;
  if (std::isinf(edge)) {
    width = std::max(d.quantile(1.0 - 1e-9) - a, 1.0);
  } else {
    width = edge - a;
  }
  const double lo = std::min(width, 1e-6 * (1.0 + a));
  double best = 0.0;
  const int n = std::max(cfg.n_delta, 2);
  const double ratio = std::log(width / lo);
  for (int i = 0; i < n; ++i) {
    // log-spaced from lo to width; the last candidate is exactly width, so
    // the atom-reaching quantum of a type-A truncation is always probed.
    const double delta =
        (i == n - 1) ? width : lo * std::exp(ratio * i / (n - 1));
    best = std::max(best, efficiency(d, a, delta));
  }
  return best;
}

// Dense index table on a uniform attained-service grid with linear
// interpolation, clamped at both ends.
class GittinsTable {
 public:
  GittinsTable() = default;
  GittinsTable(std::vector<double> values, double a_max, std::string tag)
      : values_(std::move(values)), a_max_(a_max), tag_(std::move(tag)) {
    if (values_.size() < 2 || !(a_max_ > 0))
      throw std::invalid_argument("GittinsTable: need >= 2 points, a_max > 0");
    step_ = a_max_ / static_cast<double>(values_.size() - 1);
  }

  double operator()(double a) const {
    if (a <= 0) return values_.front();
    if (a >= a_max_) return values_.back();
    const double pos = a / step_;
    const std::size_t i = std::min(static_cast<std::size_t>(pos),
                                   values_.size() - 2);
    const double w = pos - static_cast<double>(i);
    const double v0 = values_[i], v1 = values_[i + 1];
    if (w == 0.0 || v0 == v1) return v0;
    if (std::isinf(v0) || std::isinf(v1)) return kInf;
    return v0 + w * (v1 - v0);
  }

  double a_max() const { return a_max_; }
  double step() const { return step_; }
  std::size_t size() const { return values_.size(); }
  double value_at(std::size_t i) const { return values_[i]; }
  const std::string& tag() const { return tag_; }

 private:
  std::vector<double> values_;
  double a_max_ = 0;
  double step_ = 0;
  std::string tag_;
};

inline GittinsTable build_table(const ServiceDistribution& d,
                                GittinsConfig cfg = {}) {
  const double edge = d.right_edge();
  double a_max = cfg.a_max;
  if (a_max > 0) {
    if (a_max > edge)
      throw std::invalid_argument("build_table: a_max beyond support edge");
  } else {
    a_max = d.truncation_point() ? std::min(*d.truncation_point(), edge)
                                 : d.quantile(0.9999);
    a_max = std::min(a_max, edge);
  }
  const double want_step = cfg.grid_step > 0 ? cfg.grid_step : a_max / 512.0;
  const auto cells =
      std::max<std::size_t>(1, static_cast<std::size_t>(
                                   std::ceil(a_max / want_step - 1e-9)));
  std::vector<double> vals(cells + 1);
  for (std::size_t i = 0; i <= cells; ++i) {
    const double a = a_max * static_cast<double>(i) / cells;
    vals[i] = gittins_index(d, a, cfg);
  }
  return GittinsTable(std::move(vals), a_max, d.spec_string());
}

}  // namespace mg1
