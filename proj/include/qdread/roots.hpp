#pragma once

#include <cmath>
#include <optional>
#include <utility>

namespace qdread {

struct BrentResult {
  double x = 0.0;
  double fx = 0.0;
  double a = 0.0;  // final bracket
  double b = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Brent's method on a bracket [a, b] with f(a), f(b) of opposite sign
/// (or one of them zero). Stops when the bracket is narrower than
/// x_tol + 4 eps |x|, or |f| <= f_tol.
template <class F>
BrentResult brent_solve(F&& f, double a, double b, double fa, double fb, double x_tol,
                        double f_tol, int max_iter = 200) {
  constexpr double eps = 2.220446049250313e-16;
  BrentResult r;
  if (fa == 0.0) return {a, fa, a, a, 0, true};
  if (fb == 0.0) return {b, fb, b, b, 0, true};
  if ((fa > 0.0) == (fb > 0.0)) return {b, fb, a, b, 0, false};

  double c = a, fc = fa;
  double d = b - a, e = d;
  for (int it = 1; it <= max_iter; ++it) {
    if ((fb > 0.0) == (fc > 0.0)) {
      c = a;
      fc = fa;
      d = e = b - a;
    }
    if (std::abs(fc) < std::abs(fb)) {
      a = b;
      b = c;
      c = a;
      fa = fb;
      fb = fc;
      fc = fa;
    }
    const double tol = 2.0 * eps * std::abs(b) + 0.5 * x_tol;
    const double m = 0.5 * (c - b);
    if (std::abs(m) <= tol || fb == 0.0 || std::abs(fb) <= f_tol) {
      return {b, fb, std::min(b, c), std::max(b, c), it, true};
    }
    if (std::abs(e) >= tol && std::abs(fa) > std::abs(fb)) {
      double p, q;
      const double s = fb / fa;
      if (a == c) {
        p = 2.0 * m * s;
        q = 1.0 - s;
      } else {
        const double qq = fa / fc;
        const double rr = fb / fc;
        p = s * (2.0 * m * qq * (qq - rr) - (b - a) * (rr - 1.0));
        q = (qq - 1.0) * (rr - 1.0) * (s - 1.0);
      }
      if (p > 0.0) q = -q;
      p = std::abs(p);
      if (2.0 * p < std::min(3.0 * m * q - std::abs(tol * q), std::abs(e * q))) {
        e = d;
        d = p / q;
      } else {
        d = m;
        e = d;
      }
    } else {
      d = m;
      e = d;
    }
    a = b;
    fa = fb;
    b += std::abs(d) > tol ? d : (m > 0.0 ? tol : -tol);
    fb = f(b);
    r.iterations = it;
  }
  return {b, fb, std::min(b, c), std::max(b, c), max_iter, false};
}

}  // namespace qdread
