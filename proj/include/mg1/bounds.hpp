#pragma once

// Closed-form performance bounds for the truncation policies.
//
// Everything is driven by the tail statistics of the service law at the
// truncation level s and the load parameters (lambda, E X, E X^2,
// D = 1 - lambda E X).  The test suites check these formulas against
// regenerative simulation; the formulas themselves are kept free of any
// simulation state so both routes stay independent.

#include <cmath>
#include <stdexcept>

#include "mg1/distribution.hpp"

namespace mg1 {

struct BoundParams {
  double lambda = 0;
  double EX = 0;
  double EX2 = 0;  // may be +inf
  double D = 1;    // 1 - lambda EX
  double rho = 0;  // lambda EX

  static BoundParams from(double lambda, const ServiceDistribution& d) {
    if (!(lambda >= 0))
      throw std::domain_error("BoundParams: lambda must be >= 0");
    BoundParams p;
    p.lambda = lambda;
    p.EX = d.mean();
    p.EX2 = d.second_moment();
    if (!std::isfinite(p.EX))
      throw std::domain_error("BoundParams: E(X) must be finite");
    p.rho = lambda * p.EX;
    p.D = 1.0 - p.rho;
    if (!(p.D > 0))
      throw std::domain_error("BoundParams: unstable (lambda E(X) >= 1)");
    return p;
  }
};

// Busy-period basics: E(W) and E(N_B) for any work-conserving policy.
inline double mean_busy_work(const BoundParams& p) { return p.EX / p.D; }
inline double mean_busy_jobs(const BoundParams& p) { return 1.0 / p.D; }

// Pollaczek-Khinchine mean sojourn under FCFS.
inline double pk_mean_sojourn(const BoundParams& p) {
  if (!std::isfinite(p.EX2))
    throw std::domain_error("pk_mean_sojourn: needs finite E(X^2)");
  return p.EX + p.lambda * p.EX2 / (2.0 * p.D);
}

// Conditional busy-period bounds given a large service time appeared:
//   E[W   | A^c] <= E[X | X>s] / D^2
//   E[N_B | A^c] <= 1/D + lambda E[X | X>s] / D^2
//   P(A^c)       <= P(X > s) / D
struct Lemma1Bounds {
  double W_ub = 0;
  double N_ub = 0;
  double PAc_ub = 0;
};

inline Lemma1Bounds lemma1_bounds(const BoundParams& p, const TailStats& t) {
  if (!t.tail_defined)
    throw std::domain_error("lemma1_bounds: P(X > s) = 0 at this s");
  Lemma1Bounds b;
  b.W_ub = t.cond_m1 / (p.D * p.D);
  b.N_ub = 1.0 / p.D + p.lambda * t.cond_m1 / (p.D * p.D);
  b.PAc_ub = t.p_tail / p.D;
  return b;
}

// Switching-policy gap constants:
//   K1 = (2 + D + (lambda EX + lambda^2 EX2)/D) / D^4
//   K2 = (2 lambda / D + lambda) / D^4
struct Thm2Constants {
  double K1 = 0;
  double K2 = 0;
};

inline Thm2Constants thm2_constants(const BoundParams& p) {
  if (!std::isfinite(p.EX2))
    throw std::domain_error("thm2_constants: needs finite E(X^2)");
  const double d4 = p.D * p.D * p.D * p.D;
  Thm2Constants k;
  k.K1 = (2.0 + p.D + (p.lambda * p.EX + p.lambda * p.lambda * p.EX2) / p.D) /
         d4;
  k.K2 = (2.0 * p.lambda / p.D + p.lambda) / d4;
  return k;
}

// Constants as independently reported for the reference example
// (pareto alpha=3, lambda=1).  They disagree with what the formulas above
// give for the same parameters (88, 80); both curves are kept visible and
// the tests assert the smaller, formula-derived pair.
inline constexpr double kReportedK1 = 120.0;
inline constexpr double kReportedK2 = 144.0;

struct Thm2Gap {
  Thm2Constants k;
  double g = 0;             // K1 E[X 1{X>s}] + K2 E[X^2 1{X>s}]
  double g_reported = 0;    // same tail moments, reported constants
  double ewnb_ub = 0;       // E(W N_B) <= (EX + lambda EX2)/D^3
  Lemma1Bounds lemma1;
};

inline Thm2Gap thm2_gap(const BoundParams& p, const TailStats& t) {
  Thm2Gap g;
  g.k = thm2_constants(p);
  g.g = g.k.K1 * t.m1_tail + g.k.K2 * t.m2_tail;
  g.g_reported = kReportedK1 * t.m1_tail + kReportedK2 * t.m2_tail;
  g.ewnb_ub = (p.EX + p.lambda * p.EX2) / (p.D * p.D * p.D);
  g.lemma1 = lemma1_bounds(p, t);
  return g;
}

// Residual-cost chain for the two-class truncation policy.  Only needs
// E(X) < inf (plus the truncated moments), so it applies to laws whose
// second moment diverges.
enum class Thm1Status {
  Ok,
  Unstable,   // lambda E(X^s) >= 1: truncated system itself unstable
  STooSmall,  // 1 - lambda E(M) E[X-s|X>s] <= 0: bound vacuous at this s
};

struct Thm1Bound {
  double EM = 0;      // mean demoted jobs per period (exact, not a bound)
  double EL = 0;      // mean time to first low-priority service (exact)
  double EM2 = 0;     // E(M^2) (exact)
  double EML_ub = 0;  // upper bound on E(M L)
  double EMQ_ub = 0;  // upper bound on E(M Q)
  double ER_ub = 0;   // upper bound on E(R); +inf when vacuous
  Thm1Status status = Thm1Status::Ok;
};

inline Thm1Bound thm1_chain(const BoundParams& p, const TailStats& t) {
  Thm1Bound b;
  const double lam = p.lambda;
  const double den1 = 1.0 - lam * t.m1_trunc;
  if (!(den1 > 0)) {
    b.status = Thm1Status::Unstable;
    b.ER_ub = kInf;
    return b;
  }
  b.EM = t.p_tail / den1;
  b.EL = t.m1_trunc / den1;
  if (t.p_tail == 0.0) return b;  // no demotions: everything stays 0

  const double s = t.s;
  b.EML_ub = (s * t.p_tail + lam * t.m2_trunc * b.EM) * (1.0 + lam * b.EL) /
             den1;
  b.EM2 = (t.p_tail + 2.0 * s * t.p_tail * lam * b.EM +
           lam * lam * t.m2_trunc * b.EM * b.EM) /
          den1;
  b.EMQ_ub = b.EM2 * t.resid_m1;

  const double den2 = 1.0 - lam * b.EM * t.resid_m1;
  if (!(den2 > 0)) {
    b.status = Thm1Status::STooSmall;
    b.ER_ub = kInf;
    return b;
  }
  b.ER_ub = (b.EML_ub + b.EMQ_ub / p.D) / den2;
  return b;
}

}  // namespace mg1
