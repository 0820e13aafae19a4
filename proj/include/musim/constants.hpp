#pragma once

namespace musim {

// Linear-frequency unit conventions used throughout: MHz, mT, ns.
inline constexpr double kMuBOverH_MHz_per_mT = 13.996245;   // Bohr magneton / Planck constant
inline constexpr double kGammaMu_MHz_per_mT = 0.1355388;    // muon gyromagnetic ratio / 2pi
inline constexpr double kMuonLifetime_ns = 2197.0;
inline constexpr double kPi = 3.14159265358979323846;

// Phase accumulated per (MHz * ns).
inline constexpr double kTwoPiMHzns = 2.0 * kPi * 1e-3;

// FWHM of a Gaussian in units of its standard deviation.
inline constexpr double kFwhmPerSigma = 2.354820045030949;

}  // namespace musim
