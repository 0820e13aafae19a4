#pragma once

#include "musim/constants.hpp"
#include "musim/operators.hpp"

namespace musim {

enum class Coupling { Isotropic, Axial };

// Physical constants of one electron-muon pair. Frequencies are linear
// (nu = omega/2pi) in MHz; fields in mT.
struct SpinSystem {
  double g_e = 2.002319;                         // electron g-factor
  double gamma_mu = kGammaMu_MHz_per_mT;         // muon gyromagnetic ratio, MHz/mT
  double mu_b_over_h = kMuBOverH_MHz_per_mT;     // MHz/mT, overridable
  Coupling coupling = Coupling::Isotropic;
  double a_par = 0.0;                            // A_par/2pi (MHz); A_iso for isotropic
  double a_perp = 0.0;                           // A_perp/2pi (MHz), >= 0

  static SpinSystem isotropic(double a_iso_MHz, double g_e = 2.002319);
  static SpinSystem axial(double a_par_MHz, double a_perp_MHz, double g_e);

  // Electron drive/Zeeman proportionality gamma_e = g_e * muB/h, MHz/mT.
  double gamma_e() const { return g_e * mu_b_over_h; }
  // Electron Zeeman frequency nu_S at field B0.
  double nu_s(double b0_mT) const { return gamma_e() * b0_mT; }
  // Muon Zeeman frequency magnitude nu_I at field B0.
  double nu_i(double b0_mT) const { return gamma_mu * b0_mT; }

  void validate() const;  // throws std::invalid_argument
};

// H0/h in MHz: +nu_S Sz - nu_I Iz + coupling term; see SpinSystem docs for
// the sign convention (electron up, muon down), which reproduces the level
// ordering used throughout.
Mat4 build_static_hamiltonian(const SpinSystem& sys, double b0_mT);

// Transverse drive operator per mT of B1: -gamma_e Sx + gamma_mu Ix (MHz/mT).
Mat4 drive_operator(const SpinSystem& sys);

}  // namespace musim
