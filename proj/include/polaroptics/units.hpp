// units.hpp - Physical constants and unit conversions
//
// Energies are in eV and hbar = 1, so times are in eV^-1 (1 eV^-1 = 0.6582 fs).
// Lengths are in nm, in-plane wavevectors in nm^-1, angles in degrees at API
// boundaries.

#pragma once

#include <numbers>

namespace polaroptics::units {

inline constexpr double pi = std::numbers::pi;

inline constexpr double hbar_c_eV_nm = 197.3269804;     // hbar*c
inline constexpr double hc_eV_nm = 1239.841984;         // h*c, E[eV] * lambda[nm]
inline constexpr double hbar_eV_fs = 0.6582119569;      // 1 eV^-1 in fs
inline constexpr double boltzmann_eV_per_K = 8.617333262e-5;

inline constexpr double wavelength_nm(double energy_eV) { return hc_eV_nm / energy_eV; }
inline constexpr double deg_to_rad(double deg) { return deg * pi / 180.0; }
inline constexpr double rad_to_deg(double rad) { return rad * 180.0 / pi; }
inline constexpr double time_to_fs(double t_inv_eV) { return t_inv_eV * hbar_eV_fs; }
inline constexpr double metres_to_nm(double m) { return m * 1e9; }

} // namespace polaroptics::units
