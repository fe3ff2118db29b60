#pragma once

// Globally adaptive Gauss-Kronrod (7/15) quadrature over a set of panels.
//
// The caller supplies the breakpoints of the integrand (discontinuities,
// resonance centres). Every panel gets one G7/K15 estimate; the panel with
// the largest error estimate is bisected until the summed error meets
// max(rel_tol * |I|, abs_tol) or max_subdivisions is reached.

#include <algorithm>
#include <array>
#include <cmath>
#include <queue>
#include <span>
#include <vector>

#include "qdread/errors.hpp"

namespace qdread {

struct QuadratureOptions {
  double rel_tol = 1e-6;
  double abs_tol = 0.0;
  int max_subdivisions = 2000;
};

struct QuadratureResult {
  double value = 0.0;
  double error = 0.0;
  int intervals = 0;
  int evaluations = 0;
};

namespace gk15 {

// Kronrod abscissae on [0, 1]; odd indices are the 7-point Gauss nodes.
inline constexpr std::array<double, 8> xk{
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> wk{
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> wg{
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Panel {
  double a;
  double b;
  double value;
  double error;

  bool operator<(const Panel& o) const { return error < o.error; }
};

template <class F>
Panel evaluate(F& f, double a, double b) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  const double fc = f(c);
  double kronrod = fc * wk[7];
  double gauss = fc * wg[3];
  for (std::size_t j = 0; j < 7; ++j) {
    const double dx = h * xk[j];
    const double sum = f(c - dx) + f(c + dx);
    kronrod += wk[j] * sum;
    if (j % 2 == 1) gauss += wg[j / 2] * sum;
  }
  kronrod *= h;
  gauss *= h;
  return {a, b, kronrod, std::abs(kronrod - gauss)};
}

}  // namespace gk15

/// Integrates f over [breakpoints.front(), breakpoints.back()]. Breakpoints
/// must be sorted; zero-width panels are skipped. Throws QuadratureError
/// (carrying the partial estimate) when the tolerance is not met.
template <class F>
QuadratureResult integrate_panels(F&& f, std::span<const double> breakpoints,
                                  const QuadratureOptions& opt = {}) {
  QuadratureResult out;
  std::priority_queue<gk15::Panel> heap;
  for (std::size_t i = 0; i + 1 < breakpoints.size(); ++i) {
    if (!(breakpoints[i + 1] > breakpoints[i])) continue;
    heap.push(gk15::evaluate(f, breakpoints[i], breakpoints[i + 1]));
    out.evaluations += 15;
  }
  if (heap.empty()) return out;

  // Totals are recomputed from the heap contents periodically to avoid
  // drift from repeated add/subtract.
  double value = 0.0;
  double error = 0.0;
  auto resum = [&] {
    auto copy = heap;
    value = 0.0;
    error = 0.0;
    while (!copy.empty()) {
      value += copy.top().value;
      error += copy.top().error;
      copy.pop();
    }
  };
  resum();

  int subdivisions = static_cast<int>(heap.size());
  auto converged = [&] { return error <= std::max(opt.rel_tol * std::abs(value), opt.abs_tol); };

  while (!converged()) {
    if (subdivisions >= opt.max_subdivisions) {
      resum();
      if (converged()) break;
      throw QuadratureError("adaptive quadrature: subdivision limit reached", value, error);
    }
    const gk15::Panel worst = heap.top();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b)) {
      // Panel is at floating-point resolution; its error cannot shrink.
      resum();
      if (converged()) break;
      throw QuadratureError("adaptive quadrature: panel below floating-point resolution", value,
                            error);
    }
    heap.pop();
    const auto left = gk15::evaluate(f, worst.a, mid);
    const auto right = gk15::evaluate(f, mid, worst.b);
    out.evaluations += 30;
    heap.push(left);
    heap.push(right);
    value += left.value + right.value - worst.value;
    error += left.error + right.error - worst.error;
    ++subdivisions;
    if (subdivisions % 64 == 0) resum();
  }
  resum();
  out.value = value;
  out.error = error;
  out.intervals = static_cast<int>(heap.size());
  return out;
}

}  // namespace qdread
