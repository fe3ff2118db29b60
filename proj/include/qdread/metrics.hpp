#pragma once

// Readout figures of merit: current contrast against the reference, shot
// noise, measurement time, golden-rule decoherence time and their ratio.

#include <optional>
#include <span>
#include <vector>

#include "qdread/circuit.hpp"
#include "qdread/device.hpp"
#include "qdread/transport.hpp"

namespace qdread {

inline constexpr double max_decoherence_time = 1e-6;  // s

struct MetricsRecord {
  MeasurementCase measurement_case = MeasurementCase::case_i;
  double v_d = 0.0;
  double delta = 0.0;
  double delta_i = 0.0;       // A
  double mean_current = 0.0;  // A
  double shot_noise = 0.0;    // A^2 / Hz
  double t_meas = 0.0;        // s
  double t_dec = 0.0;         // s
  double count = 0.0;
};

/// Classical shot noise 2 e |I|.
double shot_noise(double current) noexcept;

/// 4 S / dI^2; +infinity when dI = 0.
double measurement_time(double delta_i, double noise) noexcept;

struct Contrast {
  double delta_i = 0.0;
  double mean_current = 0.0;
  double case_current = 0.0;
  double reference_current = 0.0;
};

struct MetricsOptions {
  CircuitOptions circuit{};
  // Second brace of the decoherence rate: as printed (E2 in the level
  // arguments) or with the second qubit level E3 in their place.
  bool symmetrized_tdec = true;
  // Lead electron/hole densities F< and F> see the same sharp band bottoms
  // as the Landauer window.
  bool lead_band_edges = true;
  double occupancy_left = 0.5;   // f(E1)
  double occupancy_right = 0.5;  // f(E3)
};

/// |I_case - I_ref| and max(I_case, I_ref) at v_d; with a transistor both
/// currents come from the series solution. Throws DomainError for the
/// reference case.
Contrast delta_current(MeasurementCase c, double v_d, const DeviceParams& p,
                       const FetParams* fet = nullptr, const MetricsOptions& opt = {});

/// Golden-rule decoherence rate (1/s) of the qubit dots under the channel
/// current; zero when the case has no active coupling.
double decoherence_rate(MeasurementCase c, double v_d, const DeviceParams& p,
                        const MetricsOptions& opt = {});

/// min(1/rate, 1 us).
double decoherence_time(MeasurementCase c, double v_d, const DeviceParams& p,
                        const MetricsOptions& opt = {});

MetricsRecord measurement_count(MeasurementCase c, double v_d, const DeviceParams& p,
                                const FetParams* fet = nullptr, const MetricsOptions& opt = {});

/// Assembles a record from a known contrast (no transport evaluation).
MetricsRecord make_record(MeasurementCase c, double v_d, const DeviceParams& p,
                          const Contrast& contrast, const MetricsOptions& opt = {});

enum class Reduction { none, max_over_vd };

struct MetricsSweep {
  std::vector<MeasurementCase> cases;
  std::vector<double> delta_grid;  // eV
  Reduction reduction = Reduction::none;
  double v_d = 2.225e-3;             // operating bias for Reduction::none
  std::vector<double> vd_window;     // bias grid for Reduction::max_over_vd
};

/// One record per (delta, case), delta-major. With max_over_vd, each record
/// is the one of largest count over the window. Parallel over delta values.
std::vector<MetricsRecord> metrics_sweep(const MetricsSweep& sweep, const DeviceParams& p,
                                         const FetParams* fet = nullptr,
                                         const MetricsOptions& opt = {}, int workers = 0);

/// Reference kernel for metrics_sweep.
std::vector<MetricsRecord> metrics_sweep_serial(const MetricsSweep& sweep, const DeviceParams& p,
                                                const FetParams* fet = nullptr,
                                                const MetricsOptions& opt = {});

}  // namespace qdread
