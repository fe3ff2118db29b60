#pragma once

// Device description: parameters of the three-dot system, per-spin bias
// geometry, and the mapping from qubit states to side-dot configurations.

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace qdread {

enum class Spin { up, down };

inline constexpr std::array<Spin, 2> both_spins{Spin::up, Spin::down};

constexpr int sigma(Spin s) noexcept { return s == Spin::up ? +1 : -1; }
constexpr Spin flipped(Spin s) noexcept { return s == Spin::up ? Spin::down : Spin::up; }
std::string_view to_string(Spin s) noexcept;

enum class MeasurementCase { reference, case_i, case_ii, case_iii, case_iv };

inline constexpr std::array<MeasurementCase, 5> all_cases{
    MeasurementCase::reference, MeasurementCase::case_i, MeasurementCase::case_ii,
    MeasurementCase::case_iii, MeasurementCase::case_iv};
inline constexpr std::array<MeasurementCase, 4> qubit_cases{
    MeasurementCase::case_i, MeasurementCase::case_ii, MeasurementCase::case_iii,
    MeasurementCase::case_iv};

std::string_view to_string(MeasurementCase c) noexcept;
std::optional<MeasurementCase> parse_case(std::string_view name);

/// Spin state of the resident electron in a qubit dot.
enum class QubitState { up, down };

struct QubitPair {
  QubitState left;
  QubitState right;
};

/// (left, right) qubit states of a measurement case; nullopt for the reference.
std::optional<QubitPair> qubit_states(MeasurementCase c) noexcept;

/// Global spin flip of both qubits: i <-> ii, iii <-> iv.
MeasurementCase mirrored(MeasurementCase c) noexcept;

enum class CaseVariant {
  single_channel,  // mixed cases dress only the left qubit's channel
  both_channels,   // every qubit dresses the channel its singlet level accepts
};

/// Assignment table from cases to side-dot configurations. Data, not code:
/// configuration may pick the variant and shift the side levels per case.
struct CaseTable {
  CaseVariant variant = CaseVariant::single_channel;
  std::array<double, 5> level_shift{};  // eV, indexed by MeasurementCase

  bool operator==(const CaseTable&) const = default;
};

struct DeviceParams {
  double e1 = 0.0;                 // qubit-dot singlet level, E1 = E3 (eV)
  double e2_0 = 0.0;               // channel-dot level at zero bias (eV)
  double w12 = 0.0;                // left qubit <-> channel coupling (eV)
  double w23 = 0.0;                // channel <-> right qubit coupling (eV)
  double delta = 0.0;              // Zeeman splitting (eV)
  double delta_broadening = 1e-9;  // side-dot infinitesimal (eV)
  double ef = 0.0;                 // equilibrium Fermi energy (eV)
  double gamma_l = 0.0;            // source coupling (eV)
  double gamma_r = 0.0;            // drain coupling (eV)
  double temperature = 0.0;        // K
  CaseTable case_table{};

  double gamma_total() const noexcept { return gamma_l + gamma_r; }
  double thermal_energy() const noexcept;

  /// Throws ConfigError naming the first violated field.
  void validate() const;

  bool operator==(const DeviceParams&) const = default;
};

/// Parameter point of the I-V figures: E_F = 1 meV, E2(0) = E_F + u0,
/// E1 = E3 = E_F + 2u0, W = 2u0, Gamma = 0.02u0, Delta = 0.16 meV, T = 100 mK.
DeviceParams default_device();

struct BiasPoint {
  Spin spin = Spin::up;
  double v_d = 0.0;
  double e2 = 0.0;
  double mu_s = 0.0;
  double mu_d = 0.0;
  double band_bottom_s = 0.0;
  double band_bottom_d = 0.0;
};

/// Effective-Fermi convention: dot levels and band bottoms are spin
/// independent, spin enters only through E_F + sigma * Delta / 2.
/// Throws DomainError for v_d < 0.
BiasPoint bias_geometry(const DeviceParams& p, double v_d, Spin spin);

/// Bias at which the channel level enters the source window (e2 = mu_s).
double onset_bias(const DeviceParams& p, Spin spin) noexcept;
/// Bias at which the channel level drops below the source band bottom.
double peak_end_bias(const DeviceParams& p) noexcept;

struct SideDot {
  double level = 0.0;
  double coupling = 0.0;

  bool operator==(const SideDot&) const = default;
};

struct CaseConfig {
  std::vector<SideDot> up;
  std::vector<SideDot> down;

  const std::vector<SideDot>& channel(Spin s) const noexcept { return s == Spin::up ? up : down; }
  std::vector<SideDot>& channel(Spin s) noexcept { return s == Spin::up ? up : down; }

  bool operator==(const CaseConfig&) const = default;
};

CaseConfig case_config(MeasurementCase c, const DeviceParams& p);

/// Zeeman energy g mu_B B with g = 2. Throws DomainError for negative field.
double zeeman_from_field(double b_tesla);
double field_from_zeeman(double delta_eV);

}  // namespace qdread
