// Acceptance gate: one PASS/FAIL line per criterion, measured values
// alongside. Exits nonzero if any criterion fails.

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "qdread/circuit.hpp"
#include "qdread/config.hpp"
#include "qdread/device.hpp"
#include "qdread/harness.hpp"
#include "qdread/metrics.hpp"
#include "qdread/transport.hpp"

using namespace qdread;

namespace {

constexpr double kb = 8.617333262e-5;          // eV/K
constexpr double e2_over_h = 3.874045865e-5;   // A/eV

struct Verdict {
  bool pass = true;
  std::string detail;
};

int failures = 0;

void report(int id, const std::string& title, double limit_s, const std::function<Verdict()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Verdict v;
  try {
    v = body();
  } catch (const std::exception& e) {
    v = {false, std::string("exception: ") + e.what()};
  }
  const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  bool ok = v.pass;
  char timing[96];
  if (limit_s > 0) {
    std::snprintf(timing, sizeof timing, "; runtime %.2f s (limit %.0f s)", dt, limit_s);
    ok = ok && dt < limit_s;
  } else {
    std::snprintf(timing, sizeof timing, "; runtime %.2f s", dt);
  }
  if (!ok) ++failures;
  std::printf("%s criterion %d (%s): %s%s\n", ok ? "PASS" : "FAIL", id, title.c_str(), v.detail.c_str(),
              timing);
  std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// |G_channel|^2 from the full 3x3 resolvent of channel + two side dots.
double transmission_by_inversion(double omega, double e2, double ea, double eb, double wa, double wb,
                                 double gl, double gr, double delta) {
  using C = std::complex<double>;
  Eigen::Matrix3cd m;
  m << C(omega - e2, 0.5 * (gl + gr)), C(-wa, 0), C(-wb, 0),
       C(-wa, 0), C(omega - ea, delta), C(0, 0),
       C(-wb, 0), C(0, 0), C(omega - eb, delta);
  const C g = m.inverse()(0, 0);
  return gl * gr * std::norm(g);
}

// First bias at which y rises through level (linear interpolation).
double first_rise(const std::vector<double>& x, const std::vector<double>& y, double level) {
  for (std::size_t k = 1; k < x.size(); ++k) {
    if (y[k - 1] < level && y[k] >= level) {
      return x[k - 1] + (level - y[k - 1]) * (x[k] - x[k - 1]) / (y[k] - y[k - 1]);
    }
  }
  return NAN;
}

// Last bias at which y falls through level.
double last_fall(const std::vector<double>& x, const std::vector<double>& y, double level) {
  for (std::size_t k = x.size() - 1; k > 0; --k) {
    if (y[k - 1] >= level && y[k] < level) {
      return x[k - 1] + (y[k - 1] - level) * (x[k] - x[k - 1]) / (y[k - 1] - y[k]);
    }
  }
  return NAN;
}

std::vector<double> column(const std::vector<IvPoint>& pts, double IvPoint::*field) {
  std::vector<double> out;
  for (const auto& p : pts) out.push_back(p.*field);
  return out;
}

Verdict oracle_equivalence() {
  std::mt19937_64 rng(20240611);
  std::uniform_real_distribution<double> level(0.5e-3, 2.5e-3), coupling(0.0, 4e-4),
      gamma(0.5e-6, 2e-5), offset(-6e-4, 6e-4);
  double worst = 0.0;
  auto check = [&](double omega, const BiasPoint& b, std::span<const SideDot> side, const DeviceParams& p) {
    const double got = transmission(omega, b, side, p);
    const double ea = side.size() > 0 ? side[0].level : 0.0;
    const double wa = side.size() > 0 ? side[0].coupling : 0.0;
    const double eb = side.size() > 1 ? side[1].level : 0.0;
    const double wb = side.size() > 1 ? side[1].coupling : 0.0;
    const double want =
        transmission_by_inversion(omega, b.e2, ea, eb, wa, wb, p.gamma_l, p.gamma_r, p.delta_broadening);
    if (want > 1e-300) worst = std::max(worst, std::abs(got - want) / want);
  };
  for (int k = 0; k < 200; ++k) {
    DeviceParams p = default_device();
    p.gamma_l = gamma(rng);
    p.gamma_r = gamma(rng);
    BiasPoint b;
    b.e2 = level(rng);
    const SideDot side[] = {{level(rng), coupling(rng)}, {level(rng), coupling(rng)}};
    check(b.e2 + offset(rng), b, side, p);
  }
  const auto p = default_device();
  for (auto c : all_cases) {
    const auto cfg = case_config(c, p);
    for (Spin s : both_spins) {
      for (double v : {0.3e-3, 1.2e-3, 2.225e-3}) {
        const auto b = bias_geometry(p, v, s);
        for (double omega : linspace(b.e2 - 5e-4, b.e2 + 5e-4, 101)) check(omega, b, cfg.channel(s), p);
      }
    }
  }
  return {worst <= 1e-10, fmt("max relative error %.2e over 200 random draws and the fig3 device (bound 1e-10)", worst)};
}

Verdict breit_wigner() {
  auto p = default_device();
  p.w12 = p.w23 = 0.0;
  const auto b = bias_geometry(p, 1.5e-3, Spin::up);
  const double peak = transmission(b.e2, b, {}, p);
  const double closed = e2_over_h * 2.0 * M_PI * p.gamma_l * p.gamma_r / p.gamma_total();
  const double plateau = spin_current(1.5e-3, Spin::up, MeasurementCase::reference, p).value;
  const double plateau_dn = spin_current(1.5e-3, Spin::down, MeasurementCase::reference, p).value;
  const double rel = std::abs(plateau - closed) / closed;
  const double rel_dn = std::abs(plateau_dn - closed) / closed;
  const bool ok = std::abs(peak - 1.0) <= 1e-12 && rel < 5e-3 && rel_dn < 5e-3 && plateau > 0.2e-9 &&
                  plateau < 0.3e-9;
  return {ok, fmt("peak T = 1%+.1e; plateau %.4g nA (up), %.4g nA (down) vs closed form %.4g nA, "
                  "deviation %.3f%% / %.3f%% (bound 0.5%%)",
                  peak - 1.0, plateau * 1e9, plateau_dn * 1e9, closed * 1e9, rel * 100, rel_dn * 100)};
}

Verdict onset_splitting() {
  const auto p = default_device();
  const double tol = 4 * kb * p.temperature;
  const auto grid = linspace(0.0, 0.6e-3, 1201);
  const auto iv = iv_curve(MeasurementCase::reference, p, grid);
  const double plateau_up = spin_current(1.5e-3, Spin::up, MeasurementCase::reference, p).value;
  const double plateau_dn = spin_current(1.5e-3, Spin::down, MeasurementCase::reference, p).value;
  const double on_up = first_rise(grid, column(iv, &IvPoint::i_up), 0.1 * plateau_up);
  const double on_dn = first_rise(grid, column(iv, &IvPoint::i_down), 0.1 * plateau_dn);
  const double split = on_dn - on_up;
  const bool ok_split = std::abs(split - 2 * p.delta) <= tol;
  const bool ok_up = std::abs(on_up - 0.04e-3) <= tol;
  const bool ok_dn = std::abs(on_dn - 0.36e-3) <= tol;
  return {ok_split && ok_up && ok_dn,
          fmt("onsets %.4f mV (up, %s) and %.4f mV (down, %s); splitting %.4f mV vs 2Delta = %.4f mV (%s); "
              "tolerance 4kT = %.4f mV",
              on_up * 1e3, ok_up ? "ok" : "outside", on_dn * 1e3, ok_dn ? "ok" : "outside", split * 1e3,
              2 * p.delta * 1e3, ok_split ? "ok" : "outside", tol * 1e3)};
}

Verdict ndc_end() {
  const auto p = default_device();
  const double nominal = 2 * p.e2_0;
  const auto grid = linspace(0.0, 3e-3, 3001);
  auto end_of = [&](const std::vector<double>& y) {
    return last_fall(grid, y, 0.5 * *std::max_element(y.begin(), y.end()));
  };
  bool ok = true;
  double lo = INFINITY, hi = -INFINITY, spin_gap = 0.0;
  for (auto c : all_cases) {
    const auto iv = iv_curve(c, p, grid);
    for (double e : {end_of(column(iv, &IvPoint::i_total)), end_of(column(iv, &IvPoint::i_up)),
                     end_of(column(iv, &IvPoint::i_down))}) {
      ok = ok && std::isfinite(e) && std::abs(e - nominal) <= 0.2e-3;
      lo = std::min(lo, e);
      hi = std::max(hi, e);
    }
    // Spin independence: the same side-dot configuration carried by either spin.
    const auto cfg = case_config(c, p);
    for (Spin s : both_spins) {
      std::vector<double> up, dn;
      for (double v : grid) {
        up.push_back(channel_current(v, Spin::up, cfg.channel(s), p).value);
        dn.push_back(channel_current(v, Spin::down, cfg.channel(s), p).value);
      }
      spin_gap = std::max(spin_gap, std::abs(end_of(up) - end_of(dn)));
    }
  }
  ok = ok && spin_gap <= 1e-5;
  return {ok, fmt("50%% fall between %.4f and %.4f mV over five cases, totals and both spin channels (window "
                  "%.1f +- 0.2 mV); largest shift between spins for one side-dot configuration %.2e mV "
                  "(bound 0.01 mV)",
                  lo * 1e3, hi * 1e3, nominal * 1e3, spin_gap * 1e3)};
}

Verdict case_grouping() {
  const auto p = default_device();
  const auto grid = linspace(0.0, 3e-3, 301);
  const auto ref = iv_curve(MeasurementCase::reference, p, grid);
  const TransportOptions opt;
  double worst_inactive = 0.0, active_i = 0.0, active_ii = 0.0;
  bool ok = true;
  auto tol = [&](double a, double b) { return std::max(opt.rel_tol * std::max(std::abs(a), std::abs(b)), opt.abs_tol_A); };
  const auto ci = iv_curve(MeasurementCase::case_i, p, grid);
  const auto cii = iv_curve(MeasurementCase::case_ii, p, grid);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double in_i = std::abs(ci[k].i_down - ref[k].i_down);
    const double in_ii = std::abs(cii[k].i_up - ref[k].i_up);
    ok = ok && in_i <= tol(ci[k].i_down, ref[k].i_down) && in_ii <= tol(cii[k].i_up, ref[k].i_up);
    worst_inactive = std::max({worst_inactive, in_i, in_ii});
    active_i = std::max(active_i, std::abs(ci[k].i_up - ref[k].i_up));
    active_ii = std::max(active_ii, std::abs(cii[k].i_down - ref[k].i_down));
  }
  ok = ok && active_i > 0.0 && active_ii > 0.0;
  return {ok, fmt("inactive-channel dI at most %.2e A; active-channel max dI %.3g nA (case_i, up), %.3g nA "
                  "(case_ii, down)",
                  worst_inactive, active_i * 1e9, active_ii * 1e9)};
}

MetricsSweep sweep_of(const ExperimentSpec& s) {
  MetricsSweep m;
  m.cases = s.cases;
  m.delta_grid = s.sweep.grid();
  m.reduction = s.sweep.reduction;
  m.v_d = s.sweep.operating_vd;
  m.vd_window = s.sweep.window();
  return m;
}

std::vector<MetricsRecord> run_metrics(const ExperimentSpec& s) {
  auto spec = s;
  spec.cases.erase(std::remove(spec.cases.begin(), spec.cases.end(), MeasurementCase::reference),
                   spec.cases.end());
  return metrics_sweep(sweep_of(spec), spec.device, spec.fet.enabled ? &spec.fet : nullptr, spec.metrics);
}

double best_count(const std::vector<MetricsRecord>& rows, MeasurementCase c) {
  double best = 0.0;
  for (const auto& r : rows) {
    if (r.measurement_case == c) best = std::max(best, r.count);
  }
  return best;
}

Verdict count_criterion() {
  const auto at_bias = run_metrics(figure_preset("fig6").at(0));
  const auto window = run_metrics(figure_preset("fig5a").at(0));
  bool high = true, low = true;
  std::string a, b;
  for (auto c : qubit_cases) {
    const double n1 = best_count(at_bias, c);
    high = high && n1 > 100.0;
    a += fmt(" %s %.3g", std::string(to_string(c)).c_str(), n1);
    const double n2 = best_count(window, c);
    const bool claimed = c == MeasurementCase::case_i || c == MeasurementCase::case_iii;
    low = low && (claimed ? n2 > 100.0 : n2 < 100.0);
    b += fmt(" %s %.3g", std::string(to_string(c)).c_str(), n2);
  }
  return {high && low, "max count at 2.225 mV:" + a + (high ? " (all > 100)" : " (not all > 100)") +
                           "; max count for v_d < 0.5 mV:" + b +
                           (low ? " (> 100 exactly for case_i/case_iii)" : " (expected > 100 only for case_i/case_iii)")};
}

Verdict tdec_behavior() {
  auto p = default_device();
  p.w12 = p.w23 = 0.0;
  bool capped = true;
  for (auto c : qubit_cases) {
    for (double v : {0.2e-3, 1.0e-3, 2.225e-3}) capped = capped && decoherence_time(c, v, p) == 1e-6;
  }
  const auto spec = figure_preset("fig6").at(0);
  const auto rows = run_metrics(spec);
  bool monotone = true;
  int strict = 0;
  double lo = INFINITY, hi = 0.0;
  for (auto c : qubit_cases) {
    double prev = INFINITY;
    for (const auto& r : rows) {
      if (r.measurement_case != c) continue;
      monotone = monotone && r.t_dec <= prev;
      if (r.t_dec < prev && std::isfinite(prev)) ++strict;
      prev = r.t_dec;
      lo = std::min(lo, r.t_dec);
      hi = std::max(hi, r.t_dec);
    }
  }
  return {capped && monotone,
          fmt("W = 0 gives t_dec = 1 us exactly: %s; t_dec non-increasing in Delta for all cases: %s "
              "(%d strict decreases, range %.3g to %.3g s)",
              capped ? "yes" : "no", monotone ? "yes" : "no", strict, lo, hi)};
}

Verdict circuit() {
  const auto a = figure_preset("fig7a").at(0);
  const auto b = figure_preset("fig7b").at(0);
  const auto grid = a.sweep.grid();
  double worst_residual = 0.0;
  auto spread_of = [&](const ExperimentSpec& s) {
    const auto curves = vout_curves(all_cases, s.device, s.fet, grid, s.metrics.circuit);
    for (const auto& curve : curves) {
      for (const auto& sol : curve) {
        worst_residual = std::max(worst_residual, std::abs(sol.residual) / residual_tolerance(sol.current));
      }
    }
    const auto spread = vout_spread(curves);
    return *std::max_element(spread.begin(), spread.end());
  };
  const double s1 = spread_of(a);
  const double s10 = spread_of(b);
  const double ratio = s10 / s1;
  const bool ok_res = worst_residual <= 1.0;
  const bool ok1 = s1 < 50e-6;
  const bool ok10 = s10 > 500e-6;
  const bool ok_ratio = ratio >= 5.0 && ratio <= 20.0;
  return {ok_res && ok1 && ok10 && ok_ratio,
          fmt("worst residual / tolerance %.2e (%s); max v_out spread %.1f uV at L = 1 um (%s, bound < 50), "
              "%.1f uV at L = 10 um (%s, bound > 500); ratio %.2f (%s, bound [5, 20])",
              worst_residual, ok_res ? "ok" : "too large", s1 * 1e6, ok1 ? "ok" : "outside", s10 * 1e6,
              ok10 ? "ok" : "outside", ratio, ok_ratio ? "ok" : "outside")};
}

Verdict temperature_degradation() {
  const auto hot = figure_preset("fig8");
  auto cold = hot;
  for (auto& s : cold) s.device.temperature = 0.1;
  auto max_di = [](const ExperimentSpec& s) {
    const auto grid = s.sweep.grid();
    const auto ref = vout_curve(MeasurementCase::reference, s.device, s.fet, grid, s.metrics.circuit);
    double best = 0.0;
    for (auto c : qubit_cases) {
      const auto cur = vout_curve(c, s.device, s.fet, grid, s.metrics.circuit);
      for (std::size_t k = 0; k < grid.size(); ++k) best = std::max(best, std::abs(cur[k].current - ref[k].current));
    }
    return best;
  };
  auto max_count = [](const ExperimentSpec& s) {
    double best = 0.0;
    for (const auto& r : run_metrics(s)) best = std::max(best, r.count);
    return best;
  };
  const double di_hot = max_di(hot[0]), di_cold = max_di(cold[0]);
  const double n_hot = max_count(hot[1]), n_cold = max_count(cold[1]);
  return {di_hot < di_cold && n_hot < n_cold,
          fmt("max dI %.10g nA at 200 mK vs %.10g nA at 100 mK (relative change %.2e); max count %.10g vs "
              "%.10g (relative change %.2e)",
              di_hot * 1e9, di_cold * 1e9, di_hot / di_cold - 1, n_hot, n_cold, n_hot / n_cold - 1)};
}

Verdict robustness() {
  const auto p = default_device();
  auto q = p;
  q.delta_broadening *= 0.5;
  TransportOptions base;
  TransportOptions tight = base;
  tight.rel_tol *= 0.1;
  const auto grid = linspace(0.0, 3e-3, 301);
  double worst = 0.0;
  double worst_at = 0.0, worst_value = 0.0;
  for (auto c : all_cases) {
    const auto a = iv_curve(c, p, grid, base);
    const auto b = iv_curve(c, q, grid, tight);
    for (std::size_t k = 0; k < grid.size(); ++k) {
      for (auto f : {&IvPoint::i_up, &IvPoint::i_down, &IvPoint::i_total}) {
        const double x = a[k].*f, y = b[k].*f;
        if (x == y) continue;
        const double rel = std::abs(x - y) / std::max(std::abs(x), std::abs(y));
        if (rel > worst) {
          worst = rel;
          worst_at = grid[k];
          worst_value = x;
        }
      }
    }
  }
  return {worst < 1e-3, fmt("largest relative change %.2e (at v_d = %.3f mV, I = %.3g A) over all cases, spins "
                            "and the 301-point grid (bound 1e-3)",
                            worst, worst_at * 1e3, worst_value)};
}

}  // namespace

int main() {
  report(1, "oracle equivalence", 1, oracle_equivalence);
  report(2, "Breit-Wigner limit", 5, breit_wigner);
  report(3, "onset splitting", 10, onset_splitting);
  report(4, "NDC end", 30, ndc_end);
  report(5, "case grouping", 0, case_grouping);
  report(6, "measurement count", 300, count_criterion);
  report(7, "t_dec behavior", 0, tdec_behavior);
  report(8, "circuit", 600, circuit);
  report(9, "temperature degradation", 0, temperature_degradation);
  report(10, "numerical robustness", 0, robustness);
  std::printf("%d of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
