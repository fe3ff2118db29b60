#pragma once

#include <numbers>

namespace qdread::constants {

// CODATA 2018 exact / recommended values.
inline constexpr double electron_charge = 1.602176634e-19;  // C
inline constexpr double planck_h = 6.62607015e-34;          // J s
inline constexpr double hbar_eVs = 6.582119569e-16;        // eV s
inline constexpr double boltzmann_eV = 8.617333262e-5;      // eV / K
inline constexpr double bohr_magneton_eV = 5.7883818060e-5; // eV / T

inline constexpr double electron_g = 2.0;

/// Landauer prefactor e^2/h: amperes per eV of integrated transmission.
inline constexpr double conductance_quantum = electron_charge * electron_charge / planck_h;

/// Documentation unit used by the figure presets (0.1 meV).
inline constexpr double u0 = 1e-4;

inline constexpr double two_pi = 2.0 * std::numbers::pi;

}  // namespace qdread::constants
