#pragma once

// Spin-resolved Landauer transport through the channel dot dressed by its
// side-coupled qubit dots.

#include <complex>
#include <span>
#include <vector>

#include "qdread/device.hpp"
#include "qdread/quadrature.hpp"

namespace qdread {

/// Fermi-Dirac occupancy. Throws DomainError for temperature <= 0.
double fermi(double omega, double mu, double temperature);

/// Retarded self-energy of the channel dot from its side dots,
/// sum_j |W_j|^2 / (omega - E_j + i*delta).
std::complex<double> side_self_energy(double omega, std::span<const SideDot> side,
                                      double delta_broadening) noexcept;

/// Transmission Gamma_L Gamma_R / |omega - e2 + i Gamma/2 - Sigma(omega)|^2.
double transmission(double omega, const BiasPoint& bias, std::span<const SideDot> side,
                    const DeviceParams& p) noexcept;

/// Real poles of the closed channel+side-dot system: roots of
/// omega - e2 - sum_j W_j^2 / (omega - E_j) = 0. Returns n_distinct + 1 values.
std::vector<double> dressed_levels(double e2, std::span<const SideDot> side);

struct TransportOptions {
  double rel_tol = 1e-6;
  double abs_tol_A = 1e-18;
  int max_subdivisions = 2000;
  double window_kT = 10.0;
};

struct SpinCurrent {
  Spin spin = Spin::up;
  double value = 0.0;                      // A
  double estimated_quadrature_error = 0.0; // A
};

/// Sorted, deduplicated breakpoints of the Landauer integrand for one channel.
std::vector<double> integration_breakpoints(const BiasPoint& bias, std::span<const SideDot> side,
                                            const DeviceParams& p, const TransportOptions& opt = {});

/// Current of one spin channel with the given side-dot configuration.
/// Throws QuadratureError on non-convergence.
SpinCurrent channel_current(double v_d, Spin spin, std::span<const SideDot> side,
                            const DeviceParams& p, const TransportOptions& opt = {});

SpinCurrent spin_current(double v_d, Spin spin, MeasurementCase c, const DeviceParams& p,
                         const TransportOptions& opt = {});

double total_current(double v_d, MeasurementCase c, const DeviceParams& p,
                     const TransportOptions& opt = {});

struct IvPoint {
  double v_d = 0.0;
  double i_up = 0.0;
  double i_down = 0.0;
  double i_total = 0.0;
  double quad_error = 0.0;

  bool operator==(const IvPoint&) const = default;
};

/// Reference kernel: evaluates the grid point by point on the calling thread.
std::vector<IvPoint> iv_curve_serial(MeasurementCase c, const DeviceParams& p,
                                     std::span<const double> grid,
                                     const TransportOptions& opt = {});

/// OpenMP kernel over grid points; results are identical to the serial one.
/// workers <= 0 uses the OpenMP default.
std::vector<IvPoint> iv_curve(MeasurementCase c, const DeviceParams& p,
                              std::span<const double> grid, const TransportOptions& opt = {},
                              int workers = 0);

/// Throws DomainError unless the grid is strictly increasing and non-negative.
void check_bias_grid(std::span<const double> grid);

std::vector<double> linspace(double start, double stop, int points);

}  // namespace qdread
