#include "qdread/device.hpp"

#include <cmath>
#include <sstream>

#include "qdread/constants.hpp"
#include "qdread/errors.hpp"

namespace qdread {

namespace {

constexpr std::array<std::string_view, 5> case_names{"reference", "case_i", "case_ii", "case_iii",
                                                     "case_iv"};

void require(bool ok, std::string_view field, std::string_view rule) {
  if (!ok) {
    std::ostringstream os;
    os << "invalid device parameter " << field << ": " << rule;
    throw ConfigError(os.str());
  }
}

bool finite(double x) { return std::isfinite(x); }

}  // namespace

std::string_view to_string(Spin s) noexcept { return s == Spin::up ? "up" : "down"; }

std::string_view to_string(MeasurementCase c) noexcept {
  return case_names[static_cast<std::size_t>(c)];
}

std::optional<MeasurementCase> parse_case(std::string_view name) {
  for (auto c : all_cases) {
    if (to_string(c) == name) return c;
  }
  return std::nullopt;
}

std::optional<QubitPair> qubit_states(MeasurementCase c) noexcept {
  using enum QubitState;
  switch (c) {
    case MeasurementCase::case_i:
      return QubitPair{down, up};
    case MeasurementCase::case_ii:
      return QubitPair{up, down};
    case MeasurementCase::case_iii:
      return QubitPair{down, down};
    case MeasurementCase::case_iv:
      return QubitPair{up, up};
    case MeasurementCase::reference:
      break;
  }
  return std::nullopt;
}

MeasurementCase mirrored(MeasurementCase c) noexcept {
  switch (c) {
    case MeasurementCase::case_i:
      return MeasurementCase::case_ii;
    case MeasurementCase::case_ii:
      return MeasurementCase::case_i;
    case MeasurementCase::case_iii:
      return MeasurementCase::case_iv;
    case MeasurementCase::case_iv:
      return MeasurementCase::case_iii;
    case MeasurementCase::reference:
      break;
  }
  return c;
}

double DeviceParams::thermal_energy() const noexcept {
  return constants::boltzmann_eV * temperature;
}

void DeviceParams::validate() const {
  for (auto [name, v] : {std::pair{"e1_eV", e1}, {"e2_0_eV", e2_0}, {"w12_eV", w12},
                         {"w23_eV", w23}, {"delta_eV", delta},
                         {"delta_broadening_eV", delta_broadening}, {"ef_eV", ef},
                         {"gamma_l_eV", gamma_l}, {"gamma_r_eV", gamma_r},
                         {"temperature_K", temperature}}) {
    require(finite(v), name, "must be finite");
  }
  require(gamma_l > 0.0, "gamma_l_eV", "must be > 0");
  require(gamma_r > 0.0, "gamma_r_eV", "must be > 0");
  require(temperature > 0.0, "temperature_K", "must be > 0");
  require(delta >= 0.0, "delta_eV", "must be >= 0");
  require(delta_broadening > 0.0, "delta_broadening_eV", "must be > 0");
  require(e2_0 > ef, "e2_0_eV", "must lie above ef_eV");
  require(e1 > e2_0, "e1_eV", "must lie above e2_0_eV");
  for (double s : case_table.level_shift) require(finite(s), "level_shift_eV", "must be finite");
}

DeviceParams default_device() {
  // E_F = 10 u0, E2(0) = E_F + u0, E1 = E_F + 2 u0, W = 2 u0, Gamma = 0.02 u0,
  // written as exact decimals so that rendered configs read back unchanged.
  DeviceParams p;
  p.ef = 1.0e-3;
  p.e2_0 = 1.1e-3;
  p.e1 = 1.2e-3;
  p.w12 = 2.0e-4;
  p.w23 = 2.0e-4;
  p.delta = 0.16e-3;
  p.delta_broadening = 1e-9;
  p.gamma_l = 2.0e-6;
  p.gamma_r = 2.0e-6;
  p.temperature = 0.1;
  return p;
}

BiasPoint bias_geometry(const DeviceParams& p, double v_d, Spin spin) {
  if (!(v_d >= 0.0)) throw DomainError("bias_geometry: v_d must be >= 0");
  const double fermi = p.ef + sigma(spin) * p.delta / 2.0;
  BiasPoint b;
  b.spin = spin;
  b.v_d = v_d;
  b.e2 = p.e2_0 + v_d / 2.0;
  b.mu_s = fermi + v_d;
  b.mu_d = fermi;
  b.band_bottom_s = v_d;
  b.band_bottom_d = 0.0;
  return b;
}

double onset_bias(const DeviceParams& p, Spin spin) noexcept {
  return 2.0 * (p.e2_0 - p.ef - sigma(spin) * p.delta / 2.0);
}

double peak_end_bias(const DeviceParams& p) noexcept { return 2.0 * p.e2_0; }

CaseConfig case_config(MeasurementCase c, const DeviceParams& p) {
  CaseConfig cfg;
  const auto qubits = qubit_states(c);
  if (!qubits) return cfg;

  const double shift = p.case_table.level_shift[static_cast<std::size_t>(c)];
  // A qubit in state down leaves the singlet level E1 + Delta, which accepts
  // up-spin electrons; a qubit in state up leaves E1, which accepts down-spin.
  auto dress = [&](QubitState q, double coupling) {
    const Spin channel = q == QubitState::down ? Spin::up : Spin::down;
    const double level = (q == QubitState::down ? p.e1 + p.delta : p.e1) + shift;
    cfg.channel(channel).push_back({level, coupling});
  };

  const bool mixed = qubits->left != qubits->right;
  dress(qubits->left, p.w12);
  if (!mixed || p.case_table.variant == CaseVariant::both_channels) dress(qubits->right, p.w23);
  return cfg;
}

double zeeman_from_field(double b_tesla) {
  if (!(b_tesla >= 0.0)) throw DomainError("zeeman_from_field: field must be >= 0");
  return constants::electron_g * constants::bohr_magneton_eV * b_tesla;
}

double field_from_zeeman(double delta_eV) {
  if (!(delta_eV >= 0.0)) throw DomainError("field_from_zeeman: splitting must be >= 0");
  return delta_eV / (constants::electron_g * constants::bohr_magneton_eV);
}

}  // namespace qdread
