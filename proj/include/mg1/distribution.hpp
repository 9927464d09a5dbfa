#pragma once

// Service-time distributions: four closed-form base families plus the two
// truncation transforms used throughout the experiments.
//
//   type A: X^s = min(X, s)          -- mass P(X >= s) collapses onto an
//                                       atom at s
//   type B: F~(x) = F(min(x,s))/F(s) -- conditioning on {X <= s}
//
// All moments and tail statistics are derived from survival integrals
//   E[X 1{X>t}]   = t S(t) + int_t^inf S
//   E[X^2 1{X>t}] = t^2 S(t) + 2 int_t^inf x S(x) dx
// which stay valid in the presence of atoms.  Base families use closed
// forms for int S and int x S; truncations integrate their (recursive)
// survival with adaptive quadrature over a finite interval.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <limits>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "mg1/quadrature.hpp"
#include "mg1/rng.hpp"

namespace mg1 {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class DistKind { Pareto, Exp, Det, Unif, TruncA, TruncB };

// Everything the bound formulas need about a truncation threshold s.
struct TailStats {
  double s = 0;
  double p_tail = 0;    // P(X > s)
  double m1_tail = 0;   // E[X 1{X>s}]
  double m2_tail = 0;   // E[X^2 1{X>s}], +inf when the tail is that heavy
  double cond_m1 = 0;   // E[X | X>s]
  double cond_m2 = 0;   // E[X^2 | X>s]
  double resid_m1 = 0;  // E[X-s | X>s]
  double m1_trunc = 0;  // E[min(X,s)]
  double m2_trunc = 0;  // E[min(X,s)^2]
  bool tail_defined = true;  // false iff p_tail == 0 (conditional fields 0)
};

namespace detail {

inline std::string fmt_num(double v) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  (void)ec;
  return std::string(buf, p);
}

inline double parse_num(std::string_view sv, const char* what) {
  double v = 0;
  auto [p, ec] = std::from_chars(sv.data(), sv.data() + sv.size(), v);
  if (ec != std::errc{} || p != sv.data() + sv.size())
    throw std::invalid_argument(std::string("bad number for ") + what + ": '" +
                                std::string(sv) + "'");
  return v;
}

}  // namespace detail

class ServiceDistribution {
 public:
  // --- factories ---------------------------------------------------------
  static ServiceDistribution shifted_pareto(double alpha) {
    if (!(alpha > 0)) throw std::invalid_argument("pareto: alpha must be > 0");
    return ServiceDistribution(DistKind::Pareto, alpha, 0);
  }
  static ServiceDistribution exponential(double rate) {
    if (!(rate > 0)) throw std::invalid_argument("exp: rate must be > 0");
    return ServiceDistribution(DistKind::Exp, rate, 0);
  }
  static ServiceDistribution deterministic(double c) {
    if (!(c > 0)) throw std::invalid_argument("det: c must be > 0");
    return ServiceDistribution(DistKind::Det, c, 0);
  }
  static ServiceDistribution uniform(double a, double b) {
    if (!(a >= 0) || !(b > a))
      throw std::invalid_argument("unif: need 0 <= a < b");
    return ServiceDistribution(DistKind::Unif, a, b);
  }
  static ServiceDistribution truncated_a(ServiceDistribution base, double s) {
    if (!(s > 0)) throw std::invalid_argument("truncA: s must be > 0");
    return ServiceDistribution(DistKind::TruncA, std::move(base), s);
  }
  static ServiceDistribution truncated_b(ServiceDistribution base, double s) {
    if (!(s > 0)) throw std::invalid_argument("truncB: s must be > 0");
    if (!(base.cdf(s) > 0))
      throw std::invalid_argument("truncB: F(s) = 0, nothing to condition on");
    return ServiceDistribution(DistKind::TruncB, std::move(base), s);
  }

  // Grammar: pareto:alpha=3 | exp:rate=1 | det:c=2 | unif:a=0,b=1
  //          | truncA(<spec>,s=4) | truncB(<spec>,s=4)
  static ServiceDistribution parse(std::string_view spec);

  std::string spec_string() const;

  // --- basic law ----------------------------------------------------------
  DistKind kind() const { return kind_; }

  std::optional<double> truncation_point() const {
    if (kind_ == DistKind::TruncA || kind_ == DistKind::TruncB) return s_;
    return std::nullopt;
  }
  const ServiceDistribution& base() const {
    if (!base_) throw std::logic_error("base(): not a truncation");
    return *base_;
  }

  double survival(double x) const {  // P(X > x)
    if (x < 0) return 1.0;
    switch (kind_) {
      case DistKind::Pareto: return std::pow(x + 1.0, -p1_);
      case DistKind::Exp: return std::exp(-p1_ * x);
      case DistKind::Det: return x < p1_ ? 1.0 : 0.0;
      case DistKind::Unif:
        if (x <= p1_) return 1.0;
        if (x >= p2_) return 0.0;
        return (p2_ - x) / (p2_ - p1_);
      case DistKind::TruncA:
        return x < s_ ? base_->survival(x) : 0.0;
      case DistKind::TruncB: {
        if (x >= s_) return 0.0;
        double fs = base_->cdf(s_);
        return (base_->survival(x) - base_->survival(s_)) / fs;
      }
    }
    return 0.0;
  }

  double cdf(double x) const { return 1.0 - survival(x); }

  double point_mass(double x) const {  // P(X = x)
    switch (kind_) {
      case DistKind::Det: return x == p1_ ? 1.0 : 0.0;
      case DistKind::TruncA:
        if (x < s_) return base_->point_mass(x);
        if (x == s_) return base_->survival(s_) + base_->point_mass(s_);
        return 0.0;
      case DistKind::TruncB:
        if (x <= s_) return base_->point_mass(x) / base_->cdf(s_);
        return 0.0;
      default: return 0.0;
    }
  }

  // min{x : F(x) >= u} for u in (0,1].  Drives inverse-CDF sampling; the
  // type-A atom is hit exactly when u >= F(s-).
  double quantile(double u) const {
    if (!(u > 0.0) || !(u <= 1.0))
      throw std::domain_error("quantile: u must be in (0,1]");
    switch (kind_) {
      case DistKind::Pareto: return std::pow(1.0 - u, -1.0 / p1_) - 1.0;
      case DistKind::Exp: return -std::log1p(-u) / p1_;
      case DistKind::Det: return p1_;
      case DistKind::Unif: return p1_ + u * (p2_ - p1_);
      case DistKind::TruncA: return std::min(base_->quantile(u), s_);
      case DistKind::TruncB:
        return std::min(base_->quantile(u * base_->cdf(s_)), s_);
    }
    return 0.0;
  }

  double sample(Rng& rng) const { return quantile(rng.u01()); }

  double right_edge() const {  // sup of the support (may be +inf)
    switch (kind_) {
      case DistKind::Pareto:
      case DistKind::Exp: return kInf;
      case DistKind::Det: return p1_;
      case DistKind::Unif: return p2_;
      case DistKind::TruncA:
      case DistKind::TruncB: return std::min(base_->right_edge(), s_);
    }
    return kInf;
  }

  // --- survival integrals -------------------------------------------------
  // int_a^b P(X > t) dt, clipped to [0, right_edge].
  double int_survival(double a, double b) const {
    a = std::max(a, 0.0);
    b = std::min(b, right_edge());
    if (!(b > a)) return 0.0;
    switch (kind_) {
      case DistKind::Pareto: {
        const double al = p1_;
        if (std::isinf(b)) {
          if (al <= 1.0) return kInf;
          return std::pow(a + 1.0, 1.0 - al) / (al - 1.0);
        }
        if (al == 1.0) return std::log((b + 1.0) / (a + 1.0));
        return (std::pow(a + 1.0, 1.0 - al) - std::pow(b + 1.0, 1.0 - al)) /
               (al - 1.0);
      }
      case DistKind::Exp: {
        const double r = p1_;
        const double hi = std::isinf(b) ? 0.0 : std::exp(-r * b);
        return (std::exp(-r * a) - hi) / r;
      }
      case DistKind::Det:
        return b - a;  // b already clipped to c
      case DistKind::Unif: {
        double total = 0.0;
        const double m = std::min(b, p1_);
        if (m > a) total += m - a;
        const double lo = std::max(a, p1_), hi = std::min(b, p2_);
        if (hi > lo)
          total += ((p2_ - lo) * (p2_ - lo) - (p2_ - hi) * (p2_ - hi)) /
                   (2.0 * (p2_ - p1_));
        return total;
      }
      case DistKind::TruncA:
      case DistKind::TruncB:
        return integrate_piecewise([this](double x) { return survival(x); },
                                   a, b, cuts_);
    }
    return 0.0;
  }

  // int_a^b t P(X > t) dt, clipped to [0, right_edge].
  double int_x_survival(double a, double b) const {
    a = std::max(a, 0.0);
    b = std::min(b, right_edge());
    if (!(b > a)) return 0.0;
    switch (kind_) {
      case DistKind::Pareto: {
        const double al = p1_;
        if (std::isinf(b) && al <= 2.0) return kInf;
        // substitute u = t+1: int (u-1) u^-al du = J(1-al) - J(-al)
        auto J = [&](double p) {
          if (p == -1.0) return std::log((b + 1.0) / (a + 1.0));
          const double hi =
              std::isinf(b) ? 0.0 : std::pow(b + 1.0, p + 1.0);
          return (hi - std::pow(a + 1.0, p + 1.0)) / (p + 1.0);
        };
        return J(1.0 - al) - J(-al);
      }
      case DistKind::Exp: {
        const double r = p1_;
        auto term = [&](double x) {
          return std::isinf(x) ? 0.0
                               : std::exp(-r * x) * (r * x + 1.0) / (r * r);
        };
        return term(a) - term(b);
      }
      case DistKind::Det:
        return 0.5 * (b * b - a * a);
      case DistKind::Unif: {
        double total = 0.0;
        const double m = std::min(b, p1_);
        if (m > a) total += 0.5 * (m * m - a * a);
        const double lo = std::max(a, p1_), hi = std::min(b, p2_);
        if (hi > lo) {
          auto anti = [&](double x) {
            return (p2_ * x * x / 2.0 - x * x * x / 3.0) / (p2_ - p1_);
          };
          total += anti(hi) - anti(lo);
        }
        return total;
      }
      case DistKind::TruncA:
      case DistKind::TruncB:
        return integrate_piecewise(
            [this](double x) { return x * survival(x); }, a, b, cuts_);
    }
    return 0.0;
  }

  // --- moments & tail statistics ------------------------------------------
  double mean() const {
    switch (kind_) {
      case DistKind::Pareto: return p1_ > 1.0 ? 1.0 / (p1_ - 1.0) : kInf;
      case DistKind::Exp: return 1.0 / p1_;
      case DistKind::Det: return p1_;
      case DistKind::Unif: return 0.5 * (p1_ + p2_);
      default: return int_survival(0.0, kInf);
    }
  }

  double second_moment() const {
    switch (kind_) {
      case DistKind::Pareto:
        return p1_ > 2.0 ? 2.0 / ((p1_ - 1.0) * (p1_ - 2.0)) : kInf;
      case DistKind::Exp: return 2.0 / (p1_ * p1_);
      case DistKind::Det: return p1_ * p1_;
      case DistKind::Unif:
        return (p1_ * p1_ + p1_ * p2_ + p2_ * p2_) / 3.0;
      default: return 2.0 * int_x_survival(0.0, kInf);
    }
  }

  TailStats tail_stats(double s) const {
    if (!(s > 0)) throw std::domain_error("tail_stats: s must be > 0");
    TailStats t;
    t.s = s;
    t.p_tail = survival(s);
    t.m1_tail = s * t.p_tail + int_survival(s, kInf);
    t.m2_tail = s * s * t.p_tail + 2.0 * int_x_survival(s, kInf);
    t.m1_trunc = int_survival(0.0, s);
    t.m2_trunc = 2.0 * int_x_survival(0.0, s);
    t.tail_defined = t.p_tail > 0.0;
    if (t.tail_defined) {
      t.cond_m1 = t.m1_tail / t.p_tail;
      t.cond_m2 = t.m2_tail / t.p_tail;
      t.resid_m1 = std::max(0.0, t.cond_m1 - s);
    }
    return t;
  }

  double below_m2(double s) const {  // E[X^2 1{X < s}]
    const double p_ge = survival(s) + point_mass(s);
    return std::max(0.0, 2.0 * int_x_survival(0.0, s) - s * s * p_ge);
  }

  // P(X > s) * E[X^2 1{X < s}]: the quantity whose vanishing drives the
  // residual-cost bound to zero as s grows.
  double thm1_condition(double s) const { return survival(s) * below_m2(s); }

 private:
  ServiceDistribution(DistKind k, double p1, double p2)
      : kind_(k), p1_(p1), p2_(p2) {
    collect_cuts(cuts_);
  }
  ServiceDistribution(DistKind k, ServiceDistribution base, double s)
      : kind_(k),
        base_(std::make_shared<ServiceDistribution>(std::move(base))),
        s_(s) {
    collect_cuts(cuts_);
  }

  void collect_cuts(std::vector<double>& out) const {
    switch (kind_) {
      case DistKind::Det: out.push_back(p1_); break;
      case DistKind::Unif: out.push_back(p1_); out.push_back(p2_); break;
      case DistKind::TruncA:
      case DistKind::TruncB:
        out.push_back(s_);
        base_->collect_cuts(out);
        break;
      default: break;
    }
  }

  DistKind kind_;
  double p1_ = 0, p2_ = 0;  // alpha | rate | c | (a, b)
  std::shared_ptr<const ServiceDistribution> base_;
  double s_ = 0;              // truncation point
  std::vector<double> cuts_;  // kinks of the survival curve
};

// --- grammar ---------------------------------------------------------------

inline ServiceDistribution ServiceDistribution::parse(std::string_view spec) {
  auto fail = [&](const char* why) {
    throw std::invalid_argument("bad distribution spec '" + std::string(spec) +
                                "': " + why);
  };
  // strip whitespace
  std::string flat;
  for (char c : spec)
    if (!std::isspace(static_cast<unsigned char>(c))) flat.push_back(c);
  std::string_view sv = flat;

  for (auto [tag, kind] : {std::pair<std::string_view, DistKind>{
                               "truncA(", DistKind::TruncA},
                           {"truncB(", DistKind::TruncB}}) {
    if (sv.starts_with(tag)) {
      if (!sv.ends_with(")")) fail("missing ')'");
      std::string_view inner = sv.substr(tag.size(),
                                         sv.size() - tag.size() - 1);
      auto pos = inner.rfind(",s=");
      if (pos == std::string_view::npos) fail("truncation needs ',s=<num>'");
      double s = detail::parse_num(inner.substr(pos + 3), "s");
      ServiceDistribution base = parse(inner.substr(0, pos));
      return kind == DistKind::TruncA ? truncated_a(std::move(base), s)
                                      : truncated_b(std::move(base), s);
    }
  }

  auto colon = sv.find(':');
  if (colon == std::string_view::npos) fail("expected '<family>:<params>'");
  std::string_view name = sv.substr(0, colon);
  std::string_view params = sv.substr(colon + 1);

  // split k=v pairs on ','
  std::vector<std::pair<std::string_view, double>> kv;
  while (!params.empty()) {
    auto comma = params.find(',');
    std::string_view item = params.substr(0, comma);
    auto eq = item.find('=');
    if (eq == std::string_view::npos) fail("expected key=value");
    kv.emplace_back(item.substr(0, eq),
                    detail::parse_num(item.substr(eq + 1), "parameter"));
    if (comma == std::string_view::npos) break;
    params.remove_prefix(comma + 1);
  }
  auto get = [&](std::string_view key) {
    for (auto& [k, v] : kv)
      if (k == key) return v;
    fail("missing parameter");
    return 0.0;
  };

  if (name == "pareto") {
    if (kv.size() != 1) fail("pareto takes alpha only");
    return shifted_pareto(get("alpha"));
  }
  if (name == "exp") {
    if (kv.size() != 1) fail("exp takes rate only");
    return exponential(get("rate"));
  }
  if (name == "det") {
    if (kv.size() != 1) fail("det takes c only");
    return deterministic(get("c"));
  }
  if (name == "unif") {
    if (kv.size() != 2) fail("unif takes a and b");
    return uniform(get("a"), get("b"));
  }
  fail("unknown family");
  return exponential(1.0);  // unreachable
}

inline std::string ServiceDistribution::spec_string() const {
  using detail::fmt_num;
  switch (kind_) {
    case DistKind::Pareto: return "pareto:alpha=" + fmt_num(p1_);
    case DistKind::Exp: return "exp:rate=" + fmt_num(p1_);
    case DistKind::Det: return "det:c=" + fmt_num(p1_);
    case DistKind::Unif:
      return "unif:a=" + fmt_num(p1_) + ",b=" + fmt_num(p2_);
    case DistKind::TruncA:
      return "truncA(" + base_->spec_string() + ",s=" + fmt_num(s_) + ")";
    case DistKind::TruncB:
      return "truncB(" + base_->spec_string() + ",s=" + fmt_num(s_) + ")";
  }
  return {};
}

}  // namespace mg1
