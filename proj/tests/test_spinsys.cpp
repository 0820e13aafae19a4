#include <doctest.h>

#include <cmath>

#include "musim/constants.hpp"
#include "musim/levels.hpp"
#include "musim/operators.hpp"
#include "musim/spin_system.hpp"

using namespace musim;

// Closed-form references below are evaluated independently from the matrix
// code paths: the isotropic 4-level system splits into two pure states and a
// 2x2 mixed block whose eigenvalues follow from the quadratic formula.

TEST_CASE("physical constants") {
  CHECK(kMuBOverH_MHz_per_mT == doctest::Approx(13.996245).epsilon(1e-12));
  CHECK(kGammaMu_MHz_per_mT == doctest::Approx(0.1355388).epsilon(1e-12));
  CHECK(kMuonLifetime_ns == doctest::Approx(2197.0));
  CHECK(kFwhmPerSigma == doctest::Approx(std::sqrt(8.0 * std::log(2.0))).epsilon(1e-14));
}

TEST_CASE("static Hamiltonian is Hermitian and traceless in the Zeeman part") {
  SpinSystem iso = SpinSystem::isotropic(4500.0);
  SpinSystem ax = SpinSystem::axial(67.6, 35.6, 1.9999);
  for (double b : {0.0, 10.0, 82.525, 139.0}) {
    for (const SpinSystem* s : {&iso, &ax}) {
      Mat4 h = build_static_hamiltonian(*s, b);
      CHECK(hermiticity_residual(h) < 1e-14);
    }
  }
}

TEST_CASE("isotropic level energies match the closed-form mixed-block solution") {
  SpinSystem sys = SpinSystem::isotropic(4500.0);
  LevelDiagram d = level_diagram(sys, 82.525);
  // Outer product states: A/4 +- (nu_S - nu_I)/2; mixed pair: -A/4 +- R with
  // R = hypot((nu_S + nu_I)/2, A/2). Frozen at A = 4500 MHz, B = 82.525 mT.
  CHECK(d.energies_MHz(0) == doctest::Approx(2275.7867179075).epsilon(1e-10));
  CHECK(d.energies_MHz(1) == doctest::Approx(1407.3268079231).epsilon(1e-10));
  CHECK(d.energies_MHz(2) == doctest::Approx(-3657.3268079231).epsilon(1e-10));
  CHECK(d.energies_MHz(3) == doctest::Approx(-25.7867179075).epsilon(1e-8));
}

TEST_CASE("transition table frequencies and moments at the working field") {
  SpinSystem sys = SpinSystem::isotropic(4500.0);
  TransitionTable t = transition_table(sys, 82.525);
  CHECK(t.get(1, 2).nu_MHz == doctest::Approx(868.4599099844).epsilon(1e-9));
  CHECK(t.get(3, 4).nu_MHz == doctest::Approx(3631.5400900156).epsilon(1e-9));
  CHECK(t.get(2, 3).nu_MHz == doctest::Approx(5064.6536158463).epsilon(1e-9));
  CHECK(t.get(2, 4).nu_MHz == doctest::Approx(1433.1135258307).epsilon(1e-9));
  // Moments from the eigenvector overlaps of the mixed block.
  CHECK(t.get(3, 4).gamma_MHz_per_mT == doctest::Approx(7.346686).epsilon(1e-5));
  CHECK(t.get(1, 2).gamma_MHz_per_mT == doctest::Approx(7.230927).epsilon(1e-5));
  CHECK(t.get(2, 4).gamma_MHz_per_mT == doctest::Approx(11.932318).epsilon(1e-5));
  CHECK(t.get(1, 3).gamma_MHz_per_mT == doctest::Approx(12.002821).epsilon(1e-5));
}

TEST_CASE("high-field moment limits") {
  SpinSystem sys = SpinSystem::isotropic(4500.0);
  // Far above the mixing regime the electron-flip moments approach gamma_e/2
  // while the muon-flip moments collapse toward gamma_mu/2.
  TransitionTable t = transition_table(sys, 5000.0);
  CHECK(t.get(1, 3).gamma_MHz_per_mT ==
        doctest::Approx(sys.gamma_e() / 2.0).epsilon(2e-4));
  CHECK(t.get(2, 4).gamma_MHz_per_mT ==
        doctest::Approx(sys.gamma_e() / 2.0).epsilon(3e-4));
  CHECK(t.get(3, 4).gamma_MHz_per_mT < 0.3);
  CHECK(t.get(1, 2).gamma_MHz_per_mT < 0.2);
}

TEST_CASE("axial secular limit differs from isotropic at equal couplings") {
  SpinSystem iso = SpinSystem::isotropic(100.0);
  SpinSystem sec = SpinSystem::axial(100.0, 0.0, iso.g_e);
  Mat4 hi = build_static_hamiltonian(iso, 10.0);
  Mat4 hs = build_static_hamiltonian(sec, 10.0);
  CHECK((hi - hs).norm() > 1.0);  // flip-flop terms present only for isotropic
}

TEST_CASE("resonance_field inverts the transition frequency") {
  SpinSystem sys = SpinSystem::isotropic(4500.0);
  double b = resonance_field(sys, 3, 4, 3631.5400900156, 1.0, 1000.0);
  CHECK(b == doctest::Approx(82.525).epsilon(1e-7));
  SpinSystem si = SpinSystem::axial(67.6, 35.6, 1.9999);
  double b14 = resonance_field(si, 1, 4, 3900.0, 100.0, 200.0);
  TransitionTable t = transition_table(si, b14);
  CHECK(t.get(1, 4).nu_MHz == doctest::Approx(3900.0).epsilon(1e-9));
}

TEST_CASE("level tracking keeps adiabatic order through the sweep") {
  SpinSystem sys = SpinSystem::isotropic(4500.0);
  std::vector<double> bs;
  for (int i = 0; i <= 200; ++i) bs.push_back(0.5 * i);
  BreitRabiSweep sweep = breit_rabi_sweep(sys, bs);
  REQUIRE(sweep.diagrams.size() == bs.size());
  // Each labeled level's energy is a continuous function of field.
  for (std::size_t k = 1; k < bs.size(); ++k)
    for (int i = 0; i < 4; ++i)
      CHECK(std::abs(sweep.diagrams[k].energies_MHz(i) -
                     sweep.diagrams[k - 1].energies_MHz(i)) < 25.0);
}

TEST_CASE("drive operator structure") {
  SpinSystem sys = SpinSystem::isotropic(4500.0);
  Mat4 d = drive_operator(sys);
  CHECK(hermiticity_residual(d) < 1e-14);
  Mat4 expect = -sys.gamma_e() * ops::Sx() + sys.gamma_mu * ops::Ix();
  CHECK((d - expect).norm() < 1e-12);
}
