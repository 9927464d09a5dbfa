#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

namespace mg1 {

// Adaptive Simpson quadrature.  The integrands in this project are survival
// curves and x * survival: bounded, piecewise smooth, cheap to evaluate, on
// finite intervals (infinite tails are handled by closed forms upstream).
namespace detail {

template <class F>
double simpson_rec(const F& f, double a, double fa, double b, double fb,
                   double m, double fm, double whole, double tol, int depth) {
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol)
    return left + right + delta / 15.0;
  return simpson_rec(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1) +
         simpson_rec(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1);
}

}  // namespace detail

template <class F>
double integrate(F&& f, double a, double b, double rel_tol = 1e-10) {
  if (!(b > a)) return 0.0;
  const double m = 0.5 * (a + b);
  const double fa = f(a);
  const double fb = f(b);
  const double fm = f(m);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  // Tolerance is relative to the first estimate, with a floor so that a
  // zero integrand terminates immediately.
  const double tol = rel_tol * std::max(std::abs(whole), 1e-300);
  return detail::simpson_rec(f, a, fa, b, fb, m, fm, whole, tol, 52);
}

// Splits [a,b] at the supplied cut points (kinks/jumps of the integrand) and
// integrates each smooth piece separately.
template <class F>
double integrate_piecewise(F&& f, double a, double b,
                           std::span<const double> cuts,
                           double rel_tol = 1e-10) {
  if (!(b > a)) return 0.0;
  std::vector<double> pts;
  pts.push_back(a);
  for (double c : cuts)
    if (c > a && c < b) pts.push_back(c);
  pts.push_back(b);
  std::sort(pts.begin(), pts.end());
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i)
    total += integrate(f, pts[i], pts[i + 1], rel_tol);
  return total;
}

}  // namespace mg1
