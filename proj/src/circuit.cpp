#include "qdread/circuit.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <sstream>

#include <omp.h>

#include "qdread/roots.hpp"

namespace qdread {

void FetParams::validate() const {
  if (!enabled) return;
  auto require_positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw ConfigError(std::string("invalid fet parameter ") + name + ": must be > 0");
    }
  };
  require_positive(gate_length, "length_m");
  require_positive(gate_width, "width_m");
  require_positive(mobility, "mobility_m2_per_Vs");
  require_positive(eot, "eot_m");
  require_positive(permittivity, "epsilon_F_per_m");
  require_positive(overdrive, "overdrive_V");
}

FetParams default_fet() {
  FetParams f;
  f.enabled = true;
  return f;
}

double fet_current(double v_ds, const FetParams& fet) {
  if (!fet.enabled) throw DomainError("fet_current: transistor is disabled");
  if (!(v_ds >= 0.0)) throw DomainError("fet_current: v_ds must be >= 0");
  const double beta = fet.beta();
  if (v_ds > fet.overdrive) return 0.5 * beta * fet.overdrive * fet.overdrive;
  return beta * (fet.overdrive - 0.5 * v_ds) * v_ds;
}

double residual_tolerance(double current, const CircuitOptions& opt) {
  return std::max(opt.rel_residual * std::abs(current), opt.abs_residual);
}

namespace {

struct DotEval {
  double up = 0.0;
  double down = 0.0;
  double error = 0.0;
  double total() const { return up + down; }
};

class SeriesProblem {
 public:
  SeriesProblem(double v_d, MeasurementCase c, const DeviceParams& p, const FetParams& fet,
                const CircuitOptions& opt)
      : v_d_(v_d), cfg_(case_config(c, p)), p_(p), fet_(fet), opt_(opt) {}

  DotEval dot(double v_out) const {
    const auto up = channel_current(v_out, Spin::up, cfg_.up, p_, opt_.transport);
    const auto dn = channel_current(v_out, Spin::down, cfg_.down, p_, opt_.transport);
    return {up.value, dn.value, up.estimated_quadrature_error + dn.estimated_quadrature_error};
  }

  double residual(double v_out) const {
    return dot(v_out).total() - fet_current(v_d_ - v_out, fet_);
  }

  CircuitSolution solution(double v_out) const {
    const DotEval d = dot(v_out);
    CircuitSolution s;
    s.v_d = v_d_;
    s.v_out = v_out;
    s.v_ds = v_d_ - v_out;
    s.current = d.total();
    s.residual = d.total() - fet_current(s.v_ds, fet_);
    s.quad_error = d.error;
    s.i_up = d.up;
    s.i_down = d.down;
    return s;
  }

  double v_d() const { return v_d_; }

 private:
  double v_d_;
  CaseConfig cfg_;
  const DeviceParams& p_;
  const FetParams& fet_;
  const CircuitOptions& opt_;
};

struct Bracket {
  double a, b, fa, fb;
};

bool sign_change(double fa, double fb) { return fa == 0.0 || fb == 0.0 || (fa < 0.0) != (fb < 0.0); }

// Secant estimate of the root inside a bracket, used only for ranking.
double root_estimate(const Bracket& br) {
  if (br.fa == br.fb) return 0.5 * (br.a + br.b);
  return br.a - br.fa * (br.b - br.a) / (br.fb - br.fa);
}

// Coarse scan with refinement of every panel that shows a sign change;
// returns the lowest bracket.
Bracket smallest_root_bracket(const SeriesProblem& prob, const CircuitOptions& opt) {
  const double v_d = prob.v_d();
  const int n = std::max(opt.scan_panels, 1);
  const auto xs = linspace(0.0, v_d, n + 1);
  std::vector<double> rs(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) rs[i] = prob.residual(xs[i]);

  for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
    if (rs[i] == 0.0) return {xs[i], xs[i], 0.0, 0.0};
    if (!sign_change(rs[i], rs[i + 1])) continue;
    // Refine the panel in front of the sign change as well: a close pair of
    // roots there would otherwise be invisible at scan resolution.
    const std::size_t first = i > 0 ? i - 1 : i;
    for (std::size_t k = first; k <= i; ++k) {
      const auto sub = linspace(xs[k], xs[k + 1], opt.refine + 1);
      double fa = rs[k];
      for (std::size_t j = 0; j + 1 < sub.size(); ++j) {
        const double fb = j + 2 == sub.size() ? rs[k + 1] : prob.residual(sub[j + 1]);
        if (sign_change(fa, fb)) return {sub[j], sub[j + 1], fa, fb};
        fa = fb;
      }
    }
    return {xs[i], xs[i + 1], rs[i], rs[i + 1]};
  }
  std::ostringstream os;
  os << "solve_series: no sign change of the Kirchhoff residual on v_out in [0, " << v_d << "] V";
  throw SolverError(os.str());
}

// Expanding search outward from the warm start; returns the bracket whose
// root estimate is nearest to x0.
Bracket nearest_root_bracket(const SeriesProblem& prob, double x0, const CircuitOptions& opt) {
  const double v_d = prob.v_d();
  x0 = std::clamp(x0, 0.0, v_d);
  const double r0 = prob.residual(x0);
  if (r0 == 0.0) return {x0, x0, 0.0, 0.0};

  double left_x = x0, left_r = r0, right_x = x0, right_r = r0;
  double step = std::max(opt.local_step, 1e-15);
  while (left_x > 0.0 || right_x < v_d) {
    std::optional<Bracket> lo, hi;
    if (left_x > 0.0) {
      const double x = std::max(x0 - step, 0.0);
      const double r = prob.residual(x);
      if (sign_change(r, left_r)) lo = Bracket{x, left_x, r, left_r};
      left_x = x;
      left_r = r;
    }
    if (right_x < v_d) {
      const double x = std::min(x0 + step, v_d);
      const double r = prob.residual(x);
      if (sign_change(right_r, r)) hi = Bracket{right_x, x, right_r, r};
      right_x = x;
      right_r = r;
    }
    if (lo && hi) {
      return std::abs(root_estimate(*lo) - x0) <= std::abs(root_estimate(*hi) - x0) ? *lo : *hi;
    }
    if (lo) return *lo;
    if (hi) return *hi;
    step *= 2.0;
  }
  std::ostringstream os;
  os << "solve_series: no sign change of the Kirchhoff residual on v_out in [0, " << v_d << "] V";
  throw SolverError(os.str());
}

}  // namespace

CircuitSolution solve_series(double v_d, MeasurementCase c, const DeviceParams& p,
                             const FetParams& fet, const std::optional<CircuitSolution>& warm_start,
                             const CircuitOptions& opt) {
  if (!(v_d >= 0.0)) throw DomainError("solve_series: v_d must be >= 0");
  const SeriesProblem prob(v_d, c, p, fet, opt);

  if (!fet.enabled) {
    const DotEval d = prob.dot(v_d);
    return {v_d, v_d, 0.0, d.total(), 0.0, d.error, d.up, d.down};
  }
  if (v_d == 0.0) return prob.solution(0.0);

  const Bracket br = warm_start ? nearest_root_bracket(prob, warm_start->v_out, opt)
                                : smallest_root_bracket(prob, opt);
  if (br.fa == 0.0) return prob.solution(br.a);
  if (br.fb == 0.0) return prob.solution(br.b);

  const auto r = brent_solve([&](double x) { return prob.residual(x); }, br.a, br.b, br.fa, br.fb,
                             opt.x_tol, 0.0);
  CircuitSolution best = prob.solution(r.x);

  // Newton polish with a finite-difference slope, confined to the bracket.
  double lo = r.a, hi = r.b;
  for (int it = 0; it < 8 && std::abs(best.residual) > residual_tolerance(best.current, opt); ++it) {
    const double h = std::max(1e-9 * v_d, 1e-15);
    const double slope = (prob.residual(std::min(best.v_out + h, v_d)) -
                          prob.residual(std::max(best.v_out - h, 0.0))) /
                         (std::min(best.v_out + h, v_d) - std::max(best.v_out - h, 0.0));
    if (!(slope != 0.0) || !std::isfinite(slope)) break;
    double x = best.v_out - best.residual / slope;
    if (!(x > lo && x < hi)) x = 0.5 * (lo + hi);
    const CircuitSolution next = prob.solution(x);
    ((next.residual < 0.0) == (br.fa < 0.0) ? lo : hi) = x;
    if (std::abs(next.residual) < std::abs(best.residual)) best = next;
  }

  if (std::abs(best.residual) > residual_tolerance(best.current, opt)) {
    std::ostringstream os;
    os << "solve_series: Kirchhoff residual " << best.residual << " A did not converge at v_d = "
       << v_d << " V; best bracket [" << lo << ", " << hi << "] V";
    throw SolverError(os.str());
  }
  return best;
}

std::vector<CircuitSolution> vout_curve(MeasurementCase c, const DeviceParams& p,
                                        const FetParams& fet, std::span<const double> grid,
                                        const CircuitOptions& opt) {
  // Either direction is a valid continuation path.
  const bool up = grid.size() < 2 || grid[1] > grid[0];
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (!(up ? grid[i] > grid[i - 1] : grid[i] < grid[i - 1])) {
      throw DomainError("vout_curve: grid must be strictly monotone");
    }
  }
  std::vector<CircuitSolution> out;
  out.reserve(grid.size());
  std::optional<CircuitSolution> previous;
  for (double v : grid) {
    try {
      previous = solve_series(v, c, p, fet, previous, opt);
    } catch (const std::exception& e) {
      throw SweepError(std::string(to_string(c)) + ": " + e.what(), std::move(out));
    }
    out.push_back(*previous);
  }
  return out;
}

std::vector<std::vector<CircuitSolution>> vout_curves(std::span<const MeasurementCase> cases,
                                                      const DeviceParams& p, const FetParams& fet,
                                                      std::span<const double> grid,
                                                      const CircuitOptions& opt, int workers) {
  const auto n = static_cast<std::ptrdiff_t>(cases.size());
  std::vector<std::vector<CircuitSolution>> out(cases.size());
  std::vector<std::exception_ptr> failures(cases.size());
  const int threads = workers > 0 ? workers : omp_get_max_threads();

#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      out[i] = vout_curve(cases[i], p, fet, grid, opt);
    } catch (...) {
      failures[i] = std::current_exception();
    }
  }
  for (const auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }
  return out;
}

std::vector<double> vout_spread(std::span<const std::vector<CircuitSolution>> curves,
                                SpreadMode mode) {
  if (curves.empty()) return {};
  const std::size_t n = curves.front().size();
  std::vector<double> out(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double lo = curves.front()[i].v_out, hi = lo, drop = 0.0;
    for (const auto& curve : curves) {
      lo = std::min(lo, curve.at(i).v_out);
      hi = std::max(hi, curve.at(i).v_out);
      drop = std::max(drop, curve.at(i).v_ds);
    }
    out[i] = mode == SpreadMode::case_spread ? hi - lo : drop;
  }
  return out;
}

}  // namespace qdread
