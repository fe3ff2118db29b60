#include "qdread/transport.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <map>

#include <omp.h>

#include "qdread/constants.hpp"
#include "qdread/errors.hpp"

namespace qdread {

double fermi(double omega, double mu, double temperature) {
  if (!(temperature > 0.0)) throw DomainError("fermi: temperature must be > 0");
  const double x = (omega - mu) / (constants::boltzmann_eV * temperature);
  if (x >= 0.0) {
    const double e = std::exp(-x);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(x));
}

std::complex<double> side_self_energy(double omega, std::span<const SideDot> side,
                                      double delta_broadening) noexcept {
  std::complex<double> sigma{0.0, 0.0};
  for (const auto& dot : side) {
    sigma += dot.coupling * dot.coupling / std::complex<double>(omega - dot.level, delta_broadening);
  }
  return sigma;
}

double transmission(double omega, const BiasPoint& bias, std::span<const SideDot> side,
                    const DeviceParams& p) noexcept {
  const std::complex<double> inverse_g22 =
      std::complex<double>(omega - bias.e2, 0.5 * p.gamma_total()) -
      side_self_energy(omega, side, p.delta_broadening);
  return p.gamma_l * p.gamma_r / std::norm(inverse_g22);
}

std::vector<double> dressed_levels(double e2, std::span<const SideDot> side) {
  // Merge degenerate side levels: only the symmetric combination couples.
  std::map<double, double> weight;
  for (const auto& dot : side) {
    if (dot.coupling != 0.0) weight[dot.level] += dot.coupling * dot.coupling;
  }
  if (weight.empty()) return {e2};

  double total = 0.0;
  for (const auto& [level, w2] : weight) total += w2;
  const double reach = 2.0 * std::sqrt(total);

  auto secular = [&](double omega) {
    double g = omega - e2;
    for (const auto& [level, w2] : weight) g -= w2 / (omega - level);
    return g;
  };
  // secular() increases monotonically between consecutive poles, from -inf
  // to +inf, so plain bisection on each interval finds exactly one root.
  auto bisect = [&](double a, double b) {
    for (int it = 0; it < 200; ++it) {
      const double m = 0.5 * (a + b);
      if (!(m > a && m < b)) break;
      (secular(m) < 0.0 ? a : b) = m;
    }
    return 0.5 * (a + b);
  };

  std::vector<double> poles;
  poles.reserve(weight.size());
  for (const auto& [level, w2] : weight) poles.push_back(level);

  std::vector<double> roots;
  roots.reserve(poles.size() + 1);
  roots.push_back(bisect(std::min(e2, poles.front()) - reach, poles.front()));
  for (std::size_t i = 0; i + 1 < poles.size(); ++i) roots.push_back(bisect(poles[i], poles[i + 1]));
  roots.push_back(bisect(poles.back(), std::max(e2, poles.back()) + reach));
  return roots;
}

std::vector<double> integration_breakpoints(const BiasPoint& bias, std::span<const SideDot> side,
                                            const DeviceParams& p, const TransportOptions& opt) {
  const double kT = p.thermal_energy();
  const double lo = std::min(bias.band_bottom_s, bias.band_bottom_d) - opt.window_kT * kT;
  const double hi = bias.mu_s + opt.window_kT * kT;

  std::vector<double> pts{lo, hi, bias.e2, bias.mu_s, bias.mu_d, bias.band_bottom_s,
                          bias.band_bottom_d};
  double w2 = 0.0;
  for (const auto& dot : side) {
    pts.push_back(dot.level);
    w2 += dot.coupling * dot.coupling;
  }
  if (w2 > 0.0) {
    pts.push_back(bias.e2 - std::sqrt(w2));
    pts.push_back(bias.e2 + std::sqrt(w2));
  }
  for (double pole : dressed_levels(bias.e2, side)) pts.push_back(pole);

  std::erase_if(pts, [&](double x) { return !(x >= lo && x <= hi); });
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  return pts;
}

SpinCurrent channel_current(double v_d, Spin spin, std::span<const SideDot> side,
                            const DeviceParams& p, const TransportOptions& opt) {
  const BiasPoint bias = bias_geometry(p, v_d, spin);

  auto integrand = [&](double omega) {
    const double source = omega >= bias.band_bottom_s ? fermi(omega, bias.mu_s, p.temperature) : 0.0;
    const double drain = omega >= bias.band_bottom_d ? fermi(omega, bias.mu_d, p.temperature) : 0.0;
    const double window = source - drain;
    return window == 0.0 ? 0.0 : transmission(omega, bias, side, p) * window;
  };

  const auto breaks = integration_breakpoints(bias, side, p, opt);
  QuadratureOptions q;
  q.rel_tol = opt.rel_tol;
  q.abs_tol = opt.abs_tol_A / constants::conductance_quantum;
  q.max_subdivisions = opt.max_subdivisions;
  try {
    const auto r = integrate_panels(integrand, breaks, q);
    return {spin, constants::conductance_quantum * r.value,
            constants::conductance_quantum * r.error};
  } catch (const QuadratureError& e) {
    throw QuadratureError(std::string(e.what()) + " (" + std::string(to_string(spin)) +
                              " channel, v_d = " + std::to_string(v_d) + " V)",
                          constants::conductance_quantum * e.estimate(),
                          constants::conductance_quantum * e.error_bound());
  }
}

SpinCurrent spin_current(double v_d, Spin spin, MeasurementCase c, const DeviceParams& p,
                         const TransportOptions& opt) {
  const CaseConfig cfg = case_config(c, p);
  return channel_current(v_d, spin, cfg.channel(spin), p, opt);
}

double total_current(double v_d, MeasurementCase c, const DeviceParams& p,
                     const TransportOptions& opt) {
  const CaseConfig cfg = case_config(c, p);
  return channel_current(v_d, Spin::up, cfg.up, p, opt).value +
         channel_current(v_d, Spin::down, cfg.down, p, opt).value;
}

void check_bias_grid(std::span<const double> grid) {
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] >= 0.0)) throw DomainError("bias grid must be non-negative");
    if (i > 0 && !(grid[i] > grid[i - 1])) throw DomainError("bias grid must be strictly increasing");
  }
}

namespace {

IvPoint iv_point(double v_d, const CaseConfig& cfg, const DeviceParams& p,
                 const TransportOptions& opt) {
  const auto up = channel_current(v_d, Spin::up, cfg.up, p, opt);
  const auto dn = channel_current(v_d, Spin::down, cfg.down, p, opt);
  return {v_d, up.value, dn.value, up.value + dn.value,
          up.estimated_quadrature_error + dn.estimated_quadrature_error};
}

}  // namespace

std::vector<IvPoint> iv_curve_serial(MeasurementCase c, const DeviceParams& p,
                                     std::span<const double> grid, const TransportOptions& opt) {
  check_bias_grid(grid);
  const CaseConfig cfg = case_config(c, p);
  std::vector<IvPoint> out;
  out.reserve(grid.size());
  for (double v : grid) out.push_back(iv_point(v, cfg, p, opt));
  return out;
}

std::vector<IvPoint> iv_curve(MeasurementCase c, const DeviceParams& p,
                              std::span<const double> grid, const TransportOptions& opt,
                              int workers) {
  check_bias_grid(grid);
  const CaseConfig cfg = case_config(c, p);
  const auto n = static_cast<std::ptrdiff_t>(grid.size());
  std::vector<IvPoint> out(grid.size());
  std::vector<std::exception_ptr> failures(grid.size());
  const int threads = workers > 0 ? workers : omp_get_max_threads();

#pragma omp parallel for schedule(dynamic, 4) num_threads(threads)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      out[i] = iv_point(grid[i], cfg, p, opt);
    } catch (...) {
      failures[i] = std::current_exception();
    }
  }
  for (const auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }
  return out;
}

std::vector<double> linspace(double start, double stop, int points) {
  if (points < 1) throw DomainError("linspace: points must be >= 1");
  std::vector<double> v(static_cast<std::size_t>(points));
  if (points == 1) {
    v[0] = start;
    return v;
  }
  const double step = (stop - start) / (points - 1);
  for (int i = 0; i < points; ++i) v[i] = start + step * i;
  v.back() = stop;
  return v;
}

}  // namespace qdread
