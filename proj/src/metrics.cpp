#include "qdread/metrics.hpp"

#include <cmath>
#include <exception>
#include <limits>

#include <omp.h>

#include "qdread/constants.hpp"
#include "qdread/errors.hpp"

namespace qdread {

double shot_noise(double current) noexcept {
  return 2.0 * constants::electron_charge * std::abs(current);
}

double measurement_time(double delta_i, double noise) noexcept {
  if (delta_i == 0.0) return std::numeric_limits<double>::infinity();
  return 4.0 * noise / (delta_i * delta_i);
}

namespace {

double series_current(MeasurementCase c, double v_d, const DeviceParams& p, const FetParams* fet,
                      const MetricsOptions& opt) {
  if (fet && fet->enabled) return solve_series(v_d, c, p, *fet, std::nullopt, opt.circuit).current;
  return total_current(v_d, c, p, opt.circuit.transport);
}

Contrast contrast_of(double case_current, double reference_current) {
  return {std::abs(case_current - reference_current), std::max(case_current, reference_current),
          case_current, reference_current};
}

// Lead spectral weights seen by the channel dot at energy omega.
struct LeadFactors {
  const BiasPoint& bias;
  const DeviceParams& p;
  bool band_edges;

  bool source_open(double omega) const { return !band_edges || omega >= bias.band_bottom_s; }
  bool drain_open(double omega) const { return !band_edges || omega >= bias.band_bottom_d; }

  // F<(w) = Gamma_L f_L + Gamma_R f_R
  double electrons(double omega) const {
    double f = 0.0;
    if (source_open(omega)) f += p.gamma_l * fermi(omega, bias.mu_s, p.temperature);
    if (drain_open(omega)) f += p.gamma_r * fermi(omega, bias.mu_d, p.temperature);
    return f;
  }
  // F>(w) = Gamma_L (1 - f_L) + Gamma_R (1 - f_R)
  double holes(double omega) const {
    double f = 0.0;
    if (source_open(omega)) f += p.gamma_l * fermi(bias.mu_s, omega, p.temperature);
    if (drain_open(omega)) f += p.gamma_r * fermi(bias.mu_d, omega, p.temperature);
    return f;
  }
};

}  // namespace

Contrast delta_current(MeasurementCase c, double v_d, const DeviceParams& p, const FetParams* fet,
                       const MetricsOptions& opt) {
  if (c == MeasurementCase::reference) {
    throw DomainError("delta_current: the reference case has no contrast");
  }
  return contrast_of(series_current(c, v_d, p, fet, opt),
                     series_current(MeasurementCase::reference, v_d, p, fet, opt));
}

double decoherence_rate(MeasurementCase c, double v_d, const DeviceParams& p,
                        const MetricsOptions& opt) {
  const CaseConfig cfg = case_config(c, p);
  const double quarter_gamma2 = 0.25 * p.gamma_total() * p.gamma_total();
  double rate = 0.0;

  for (Spin s : both_spins) {
    const auto& side = cfg.channel(s);
    if (side.empty()) continue;
    const BiasPoint bias = bias_geometry(p, v_d, s);
    const LeadFactors lead{bias, p, opt.lead_band_edges};
    const double e2 = bias.e2;
    const double e1 = side[0].level;
    const double w01 = std::abs(e1 - e2);

    auto lorentz = [&](double level) { return (level - e2) * (level - e2) + quarter_gamma2; };

    const double w21 = side[0].coupling;
    rate += w21 * w21 *
            (opt.occupancy_left * lead.holes(e1 - w01) / lorentz(e1 - w01) +
             (1.0 - opt.occupancy_left) * lead.electrons(e1 + w01) / lorentz(e1 + w01));

    if (side.size() > 1) {
      const double w32 = side[1].coupling;
      const double x = opt.symmetrized_tdec ? side[1].level : e2;
      rate += w32 * w32 *
              (opt.occupancy_right * lead.holes(x - w01) / lorentz(x - w01) +
               (1.0 - opt.occupancy_right) * lead.electrons(x + w01) / lorentz(x + w01));
    }
  }
  // Energies read as hbar * angular frequency: W^2 F / (hbar (dE^2 + G^2/4)).
  return rate / constants::hbar_eVs;
}

double decoherence_time(MeasurementCase c, double v_d, const DeviceParams& p,
                        const MetricsOptions& opt) {
  const double rate = decoherence_rate(c, v_d, p, opt);
  if (!(rate > 0.0)) return max_decoherence_time;
  return std::min(1.0 / rate, max_decoherence_time);
}

MetricsRecord make_record(MeasurementCase c, double v_d, const DeviceParams& p,
                          const Contrast& contrast, const MetricsOptions& opt) {
  MetricsRecord r;
  r.measurement_case = c;
  r.v_d = v_d;
  r.delta = p.delta;
  r.delta_i = contrast.delta_i;
  r.mean_current = contrast.mean_current;
  r.shot_noise = shot_noise(contrast.mean_current);
  r.t_meas = measurement_time(r.delta_i, r.shot_noise);
  r.t_dec = decoherence_time(c, v_d, p, opt);
  r.count = std::isfinite(r.t_meas) ? r.t_dec / r.t_meas : 0.0;
  return r;
}

MetricsRecord measurement_count(MeasurementCase c, double v_d, const DeviceParams& p,
                                const FetParams* fet, const MetricsOptions& opt) {
  return make_record(c, v_d, p, delta_current(c, v_d, p, fet, opt), opt);
}

namespace {

std::vector<double> currents_over(MeasurementCase c, const DeviceParams& p, const FetParams* fet,
                                  std::span<const double> grid, const MetricsOptions& opt) {
  std::vector<double> out;
  out.reserve(grid.size());
  if (fet && fet->enabled) {
    for (const auto& s : vout_curve(c, p, *fet, grid, opt.circuit)) out.push_back(s.current);
  } else {
    for (const auto& pt : iv_curve_serial(c, p, grid, opt.circuit.transport)) out.push_back(pt.i_total);
  }
  return out;
}

std::vector<MetricsRecord> sweep_one_delta(const MetricsSweep& sweep, double delta,
                                           DeviceParams p, const FetParams* fet,
                                           const MetricsOptions& opt) {
  p.delta = delta;
  std::vector<MetricsRecord> out;
  out.reserve(sweep.cases.size());

  if (sweep.reduction == Reduction::none) {
    const double ref = series_current(MeasurementCase::reference, sweep.v_d, p, fet, opt);
    for (auto c : sweep.cases) {
      if (c == MeasurementCase::reference) throw DomainError("metrics_sweep: reference is not a qubit case");
      const double cur = series_current(c, sweep.v_d, p, fet, opt);
      out.push_back(make_record(c, sweep.v_d, p, contrast_of(cur, ref), opt));
    }
    return out;
  }

  const auto& window = sweep.vd_window;
  if (window.empty()) throw DomainError("metrics_sweep: empty bias window for max_over_vd");
  const auto ref = currents_over(MeasurementCase::reference, p, fet, window, opt);
  for (auto c : sweep.cases) {
    if (c == MeasurementCase::reference) throw DomainError("metrics_sweep: reference is not a qubit case");
    const auto cur = currents_over(c, p, fet, window, opt);
    MetricsRecord best;
    for (std::size_t i = 0; i < window.size(); ++i) {
      const auto rec = make_record(c, window[i], p, contrast_of(cur[i], ref[i]), opt);
      if (i == 0 || rec.count > best.count) best = rec;
    }
    out.push_back(best);
  }
  return out;
}

}  // namespace

std::vector<MetricsRecord> metrics_sweep_serial(const MetricsSweep& sweep, const DeviceParams& p,
                                                const FetParams* fet, const MetricsOptions& opt) {
  std::vector<MetricsRecord> out;
  for (double delta : sweep.delta_grid) {
    auto rows = sweep_one_delta(sweep, delta, p, fet, opt);
    out.insert(out.end(), rows.begin(), rows.end());
  }
  return out;
}

std::vector<MetricsRecord> metrics_sweep(const MetricsSweep& sweep, const DeviceParams& p,
                                         const FetParams* fet, const MetricsOptions& opt,
                                         int workers) {
  const auto n = static_cast<std::ptrdiff_t>(sweep.delta_grid.size());
  std::vector<std::vector<MetricsRecord>> rows(sweep.delta_grid.size());
  std::vector<std::exception_ptr> failures(sweep.delta_grid.size());
  const int threads = workers > 0 ? workers : omp_get_max_threads();

#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      rows[i] = sweep_one_delta(sweep, sweep.delta_grid[i], p, fet, opt);
    } catch (...) {
      failures[i] = std::current_exception();
    }
  }
  for (const auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }
  std::vector<MetricsRecord> out;
  for (auto& r : rows) out.insert(out.end(), r.begin(), r.end());
  return out;
}

}  // namespace qdread
