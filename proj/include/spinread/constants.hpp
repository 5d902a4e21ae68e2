#ifndef SPINREAD_CONSTANTS_HPP
#define SPINREAD_CONSTANTS_HPP

#include <numbers>

// CODATA 2018. e, h and k_B are exact by definition of the SI.
namespace spinread::constants {

inline constexpr double elementary_charge = 1.602176634e-19;  // C
inline constexpr double planck = 6.62607015e-34;              // J s
inline constexpr double hbar = 1.054571817e-34;               // J s
inline constexpr double boltzmann = 1.380649e-23;             // J / K

inline constexpr double pi = std::numbers::pi;

}  // namespace spinread::constants

// Boundary conversions. Internal computation is SI throughout.
namespace spinread::units {

inline constexpr double us = 1e-6;
inline constexpr double ms = 1e-3;
inline constexpr double mK = 1e-3;
inline constexpr double MHz = 1e6;
inline constexpr double GHz = 1e9;
inline constexpr double mV = 1e-3;
inline constexpr double pF = 1e-12;
inline constexpr double nH = 1e-9;
inline constexpr double eV = constants::elementary_charge;
inline constexpr double ueV = 1e-6 * eV;
inline constexpr double neV = 1e-9 * eV;

}  // namespace spinread::units

#endif
