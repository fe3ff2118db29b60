#include "qdread/selftest.hpp"

#include <cmath>
#include <complex>
#include <random>
#include <sstream>

#include <Eigen/Dense>

#include "qdread/circuit.hpp"
#include "qdread/constants.hpp"
#include "qdread/transport.hpp"

namespace qdread {

namespace {

std::string fmt(const char* label, double value) {
  std::ostringstream os;
  os << label << value;
  return os.str();
}

SelftestCheck breit_wigner() {
  DeviceParams p = default_device();
  p.w12 = p.w23 = 0.0;
  const BiasPoint b = bias_geometry(p, 0.0, Spin::up);
  const double g = p.gamma_total();
  double worst = 0.0;
  for (double k : {-5.0, -1.0, -0.25, 0.0, 0.5, 2.0, 10.0}) {
    const double omega = b.e2 + k * g;
    const double expected = p.gamma_l * p.gamma_r / ((omega - b.e2) * (omega - b.e2) + g * g / 4.0);
    worst = std::max(worst, std::abs(transmission(omega, b, {}, p) - expected) / expected);
  }
  const double peak = transmission(b.e2, b, {}, p);
  const bool ok = worst <= 1e-12 && std::abs(peak - 1.0) <= 1e-12;
  return {"breit_wigner_closed_form", ok, fmt("max rel err ", worst) + fmt(", peak T ", peak)};
}

// Green's function of the three-dot Hamiltonian by dense inversion.
double transmission_3x3(double omega, double e2, const SideDot& a, const SideDot& c,
                        const DeviceParams& p) {
  using cd = std::complex<double>;
  const double eta = p.delta_broadening;
  Eigen::Matrix3cd m;
  m << cd(omega - a.level, eta), cd(-a.coupling, 0), cd(0, 0),
       cd(-a.coupling, 0), cd(omega - e2, 0.5 * p.gamma_total()), cd(-c.coupling, 0),
       cd(0, 0), cd(-c.coupling, 0), cd(omega - c.level, eta);
  const Eigen::Matrix3cd g = m.inverse();
  return p.gamma_l * p.gamma_r * std::norm(g(1, 1));
}

SelftestCheck inversion_equivalence() {
  std::mt19937_64 rng(20240611);
  std::uniform_real_distribution<double> level(0.5e-3, 2.5e-3), coupling(0.0, 4e-4),
      gamma(1e-7, 1e-5), eta(1e-7, 1e-5);
  double worst = 0.0;
  for (int draw = 0; draw < 200; ++draw) {
    DeviceParams p = default_device();
    p.gamma_l = gamma(rng);
    p.gamma_r = gamma(rng);
    p.delta_broadening = eta(rng);
    const SideDot a{level(rng), coupling(rng)};
    const SideDot c{level(rng), coupling(rng)};
    const double e2 = level(rng);
    const double omega = level(rng);
    BiasPoint b;
    b.e2 = e2;
    const SideDot side[] = {a, c};
    const double direct = transmission(omega, b, side, p);
    const double oracle = transmission_3x3(omega, e2, a, c, p);
    worst = std::max(worst, std::abs(direct - oracle) / oracle);
  }
  return {"green_function_3x3_equivalence", worst <= 1e-10, fmt("max rel err ", worst)};
}

SelftestCheck broadening_halving() {
  const DeviceParams p = default_device();
  DeviceParams half = p;
  half.delta_broadening *= 0.5;
  TransportOptions tight;
  tight.rel_tol *= 0.1;
  double worst = 0.0;
  for (auto c : all_cases) {
    for (double v : {0.2e-3, 1.0e-3, 2.0e-3}) {
      const double a = total_current(v, c, p);
      const double b = total_current(v, c, half, tight);
      if (a != 0.0) worst = std::max(worst, std::abs(a - b) / std::abs(a));
    }
  }
  return {"broadening_halving_insensitivity", worst < 1e-3, fmt("max rel change ", worst)};
}

SelftestCheck kirchhoff() {
  const DeviceParams p = default_device();
  const FetParams fet = default_fet();
  double worst = 0.0;
  for (auto c : all_cases) {
    for (double v : {0.3e-3, 1.5e-3, 2.225e-3}) {
      const auto s = solve_series(v, c, p, fet);
      worst = std::max(worst, std::abs(s.residual) / residual_tolerance(s.current));
    }
  }
  return {"kirchhoff_residuals", worst <= 1.0, fmt("max residual / tolerance ", worst)};
}

template <class F>
SelftestCheck guarded(const char* name, F&& f) {
  try {
    return f();
  } catch (const std::exception& e) {
    return {name, false, std::string("threw: ") + e.what()};
  }
}

}  // namespace

std::vector<SelftestCheck> run_selftest() {
  return {guarded("breit_wigner_closed_form", breit_wigner),
          guarded("green_function_3x3_equivalence", inversion_equivalence),
          guarded("broadening_halving_insensitivity", broadening_halving),
          guarded("kirchhoff_residuals", kirchhoff)};
}

}  // namespace qdread
