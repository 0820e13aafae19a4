#include "musim/spin_system.hpp"

#include <cmath>
#include <stdexcept>

namespace musim {

SpinSystem SpinSystem::isotropic(double a_iso_MHz, double g_e) {
  SpinSystem s;
  s.g_e = g_e;
  s.coupling = Coupling::Isotropic;
  s.a_par = a_iso_MHz;
  s.a_perp = 0.0;
  s.validate();
  return s;
}

SpinSystem SpinSystem::axial(double a_par_MHz, double a_perp_MHz, double g_e) {
  SpinSystem s;
  s.g_e = g_e;
  s.coupling = Coupling::Axial;
  s.a_par = a_par_MHz;
  s.a_perp = a_perp_MHz;
  s.validate();
  return s;
}

void SpinSystem::validate() const {
  if (!(g_e > 0.0)) throw std::invalid_argument("SpinSystem: g_e must be > 0");
  if (!(gamma_mu > 0.0)) throw std::invalid_argument("SpinSystem: gamma_mu must be > 0");
  if (!std::isfinite(a_par) || !std::isfinite(a_perp))
    throw std::invalid_argument("SpinSystem: hyperfine components must be finite");
  if (a_perp < 0.0) throw std::invalid_argument("SpinSystem: A_perp must be >= 0");
  if (coupling == Coupling::Isotropic && a_perp != 0.0)
    throw std::invalid_argument("SpinSystem: isotropic coupling has no A_perp");
}

Mat4 build_static_hamiltonian(const SpinSystem& sys, double b0_mT) {
  sys.validate();
  if (!std::isfinite(b0_mT)) throw std::invalid_argument("B0 must be finite");
  if (b0_mT < 0.0) throw std::invalid_argument("B0 must be >= 0");

  using namespace ops;
  Mat4 h = sys.nu_s(b0_mT) * Sz() - sys.nu_i(b0_mT) * Iz();
  if (sys.coupling == Coupling::Isotropic) {
    h += sys.a_par * SdotI();
  } else {
    h += sys.a_par * (Sz() * Iz()) + sys.a_perp * (Sz() * Ix());
  }
  return h;
}

Mat4 drive_operator(const SpinSystem& sys) {
  return -sys.gamma_e() * ops::Sx() + sys.gamma_mu * ops::Ix();
}

}  // namespace musim
