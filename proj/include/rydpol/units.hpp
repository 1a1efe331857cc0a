#pragma once

// Units table. Structure calculations run in atomic units (Hartree, Bohr,
// e*a0). Pair energies are reported in GHz (cyclic), distances in um.
// Everything on the optics side is an angular frequency in rad/us, which
// is the same number as "2pi * MHz" in the usual lab notation.

#include <numbers>

namespace rydpol::units {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

inline constexpr double kHartreeGHz = 6579683.920502;     // 1 Hartree / h in GHz
inline constexpr double kBohrUm = 5.29177210903e-5;       // a0 in um
inline constexpr double kSpeedOfLight = 299792458.0;      // um/us
inline constexpr double kElectronMassU = 5.48579909065e-4;

inline constexpr double hartree_to_ghz(double e) { return e * kHartreeGHz; }
inline constexpr double um_to_bohr(double r) { return r / kBohrUm; }
inline constexpr double bohr_to_um(double r) { return r * kBohrUm; }

// GHz (cyclic) -> rad/us
inline constexpr double ghz_to_rad_per_us(double f) { return kTwoPi * 1.0e3 * f; }
inline constexpr double rad_per_us_to_ghz(double w) { return w / (kTwoPi * 1.0e3); }

// "2pi x MHz" -> rad/us
inline constexpr double two_pi_mhz(double f) { return kTwoPi * f; }
inline constexpr double to_mhz(double w) { return w / kTwoPi; }

// Dipole-dipole prefactor: (e a0)^2 / a0^3 in Hartree, rescaled so that
// C3[GHz um^3] = kDipoleC3 * d1[a.u.] * d2[a.u.].
inline constexpr double kDipoleC3 = kHartreeGHz * kBohrUm * kBohrUm * kBohrUm;

}  // namespace rydpol::units
