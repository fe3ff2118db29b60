#pragma once

// Dot device in series with a long-channel transistor (linear-region
// compact model). V_D = V_out + V_ds with equal currents through both.

#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "qdread/device.hpp"
#include "qdread/errors.hpp"
#include "qdread/transport.hpp"

namespace qdread {

struct FetParams {
  double gate_length = 1e-6;                // m
  double gate_width = 80e-9;                // m
  double mobility = 0.1;                    // m^2 / (V s)
  double eot = 1e-9;                        // m
  double permittivity = 3.45306e-11;        // F / m, 3.9 x 8.854e-12
  double overdrive = 0.1;                   // V_g - V_th (V)
  bool enabled = false;

  /// (mobility * W / L) * (permittivity / EOT), in A/V^2.
  double beta() const noexcept {
    return mobility * gate_width / gate_length * (permittivity / eot);
  }
  void validate() const;

  bool operator==(const FetParams&) const = default;
};

/// Transistor of the circuit figures: L = 1 um, W = 80 nm, 1000 cm^2/Vs,
/// EOT = 1 nm, SiO2 permittivity, overdrive 0.1 V; enabled.
FetParams default_fet();

/// beta (V_ov - v_ds/2) v_ds below V_ov, clamped at beta V_ov^2 / 2 above.
/// Throws DomainError for v_ds < 0 or a disabled transistor.
double fet_current(double v_ds, const FetParams& fet);

struct CircuitSolution {
  double v_d = 0.0;
  double v_out = 0.0;  // across the dot device
  double v_ds = 0.0;   // across the transistor, always v_d - v_out
  double current = 0.0;
  double residual = 0.0;  // I_dot(v_out) - I_fet(v_ds)
  double quad_error = 0.0;
  double i_up = 0.0;
  double i_down = 0.0;

  bool operator==(const CircuitSolution&) const = default;
};

struct CircuitOptions {
  TransportOptions transport{};
  int scan_panels = 64;
  int refine = 8;
  double x_tol = 1e-14;          // V
  double rel_residual = 1e-6;
  double abs_residual = 1e-16;   // A
  double local_step = 1e-7;      // V, first probe of the warm-started search
};

/// Kirchhoff tolerance max(rel * |I|, abs) for a solution carrying current I.
double residual_tolerance(double current, const CircuitOptions& opt = {});

/// Solves I_dot(v_out) = I_fet(v_d - v_out) on [0, v_d]. With a warm start,
/// the root nearest to its v_out is returned; otherwise the smallest root.
/// Throws SolverError when no bracket exists or the root does not converge.
CircuitSolution solve_series(double v_d, MeasurementCase c, const DeviceParams& p,
                             const FetParams& fet,
                             const std::optional<CircuitSolution>& warm_start = std::nullopt,
                             const CircuitOptions& opt = {});

/// A continuation sweep that failed part-way; holds the solved prefix.
class SweepError : public SolverError {
 public:
  SweepError(const std::string& what, std::vector<CircuitSolution> partial)
      : SolverError(what), partial_(std::move(partial)) {}
  const std::vector<CircuitSolution>& partial() const noexcept { return partial_; }

 private:
  std::vector<CircuitSolution> partial_;
};

/// Sequential continuation along a strictly monotone grid (each point
/// warm-started from the previous one).
std::vector<CircuitSolution> vout_curve(MeasurementCase c, const DeviceParams& p,
                                        const FetParams& fet, std::span<const double> grid,
                                        const CircuitOptions& opt = {});

/// vout_curve for several cases, one continuation task per case.
std::vector<std::vector<CircuitSolution>> vout_curves(std::span<const MeasurementCase> cases,
                                                      const DeviceParams& p, const FetParams& fet,
                                                      std::span<const double> grid,
                                                      const CircuitOptions& opt = {},
                                                      int workers = 0);

enum class SpreadMode {
  case_spread,       // max_c v_out - min_c v_out at fixed v_d
  drop_from_ideal,   // max_c (v_d - v_out)
};

/// Per-bias reduction of several v_out curves sharing the same grid.
std::vector<double> vout_spread(std::span<const std::vector<CircuitSolution>> curves,
                                SpreadMode mode = SpreadMode::case_spread);

}  // namespace qdread
