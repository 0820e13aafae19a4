#include <doctest.h>

#include <cmath>
#include <complex>

#include "musim/constants.hpp"
#include "musim/levels.hpp"
#include "musim/operators.hpp"
#include "musim/propagate.hpp"
#include "musim/relaxation.hpp"
#include "musim/sequence.hpp"
#include "musim/spectrum.hpp"

using namespace musim;

namespace {

double purity(const Mat4& rho) { return (rho * rho).trace().real(); }

}  // namespace

TEST_CASE("unitary evolution preserves trace, hermiticity and purity") {
  SpinSystem sys = SpinSystem::isotropic(4500.0);
  PulseSequence seq = rabi_sequence(0.0, 1500.0, 0.946, 3631.5400900156, 1500.0);
  PropagateOptions opt;
  auto res = propagate(sys, 82.525, seq, RelaxationModel{}, opt);
  Mat4 rho0 = initial_state(Geometry::LF);
  CHECK(res.rho_final.trace().real() == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(hermiticity_residual(res.rho_final) < 1e-10);
  CHECK(purity(res.rho_final) == doctest::Approx(purity(rho0)).epsilon(1e-9));
}

TEST_CASE("relaxation keeps the trace and damps coherences") {
  SpinSystem sys = SpinSystem::isotropic(4500.0);
  RelaxationModel rel;
  rel.set_pair(3, 4, 5.0);
  PulseSequence seq = rabi_sequence(0.0, 2000.0, 0.946, 3631.5400900156, 2000.0);
  auto res = propagate(sys, 82.525, seq, rel, {});
  CHECK(res.rho_final.trace().real() == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(purity(res.rho_final) < purity(initial_state(Geometry::LF)));
}

TEST_CASE("resonant drive produces a full-contrast Rabi oscillation") {
  SpinSystem sys = SpinSystem::isotropic(4500.0);
  double nu_uw = transition_table(sys, 82.525).get(3, 4).nu_MHz;
  PulseSequence seq = rabi_sequence(0.0, 2000.0, 0.946, nu_uw, 2000.0);
  auto res = propagate(sys, 82.525, seq, RelaxationModel{}, {});
  Spectrum s = fft_spectrum(res.trace, Window::Hann, 8);
  Peak pk = find_peak(s, 2.0, 20.0);
  REQUIRE(pk.found);
  // nu_eff = gamma_34 * B1 on resonance.
  CHECK(pk.freq_MHz == doctest::Approx(7.346686 * 0.946).epsilon(0.01));
  double lo = 1e9, hi = -1e9;
  for (double v : res.trace.values) { lo = std::min(lo, v); hi = std::max(hi, v); }
  CHECK(hi - lo > 0.4);  // population swings twice the partial polarization
}

TEST_CASE("lab frame and rotating frame agree within 1 percent") {
  SpinSystem sys = SpinSystem::isotropic(4500.0);
  double nu_uw = transition_table(sys, 82.525).get(3, 4).nu_MHz;
  PulseSequence seq = rabi_sequence(0.0, 400.0, 0.946, nu_uw, 400.0);
  PropagateOptions rot;
  auto rr = propagate(sys, 82.525, seq, RelaxationModel{}, rot);
  PropagateOptions lab;
  lab.frame = Frame::Lab;
  lab.lab_dt_ns = 0.005;
  auto rl = propagate(sys, 82.525, seq, RelaxationModel{}, lab);
  REQUIRE(rr.trace.size() == rl.trace.size());
  // The lab trace carries small fast ripples on top of the envelope; compare
  // sample-wise against the full polarization scale.
  double worst = 0.0;
  for (std::size_t i = 0; i < rr.trace.size(); ++i)
    worst = std::max(worst, std::abs(rr.trace.values[i] - rl.trace.values[i]));
  CHECK(worst < 0.01);
}

TEST_CASE("frame sign choice follows the driven transition") {
  // The 3-4 transition of the isotropic system at intermediate field changes
  // the total spin projection opposite to the electron-like transitions; the
  // rotating-frame construction must still produce a resonant oscillation.
  SpinSystem sys = SpinSystem::isotropic(4500.0);
  double nu_uw = transition_table(sys, 82.525).get(3, 4).nu_MHz;
  PulseSequence seq = rabi_sequence(0.0, 2000.0, 0.946, nu_uw, 2000.0);
  auto driven = propagate(sys, 82.525, seq, RelaxationModel{}, {});
  PulseSequence freeev = rabi_sequence(0.0, 2000.0, 0.0, nu_uw, 2000.0);
  auto undriven = propagate(sys, 82.525, freeev, RelaxationModel{}, {});
  double diff = 0.0;
  for (std::size_t i = 0; i < driven.trace.size(); ++i)
    diff = std::max(diff, std::abs(driven.trace.values[i] - undriven.trace.values[i]));
  CHECK(diff > 0.4);  // the drive must actually move polarization
}

TEST_CASE("free evolution in transverse geometry shows the static muon lines") {
  SpinSystem sys = SpinSystem::axial(67.6, 35.6, 1.9999);
  PulseSequence seq = demur_cw_sequence(0.0, 3900.0, 4000.0, Geometry::TF);
  auto res = propagate(sys, 139.0, seq, RelaxationModel{}, {});
  Spectrum s = fft_spectrum(res.trace, Window::Hann, 8);
  Peak low = find_peak(s, 5.0, 40.0);
  Peak high = find_peak(s, 40.0, 80.0);
  REQUIRE(low.found);
  REQUIRE(high.found);
  // Closed-form muon frequencies at 139 mT (hypot of the effective field
  // components within each electron manifold), frozen independently.
  CHECK(low.freq_MHz == doctest::Approx(23.2517697276).epsilon(2e-3));
  CHECK(high.freq_MHz == doctest::Approx(55.5679615976).epsilon(2e-3));
}

TEST_CASE("T1 relaxation drives the state towards the identity mixture") {
  SpinSystem sys = SpinSystem::isotropic(4500.0);
  RelaxationModel rel;
  rel.rate_T1_us = 50.0;
  // T1 equalizes populations only; damp every coherence as well so the state
  // reaches the fully mixed fixed point.
  for (int i = 1; i <= 4; ++i)
    for (int j = i + 1; j <= 4; ++j) rel.set_pair(i, j, 20.0);
  PulseSequence seq = rabi_sequence(0.0, 0.0, 0.0, 0.0, 3000.0);
  auto res = propagate(sys, 82.525, seq, rel, {});
  CHECK((res.rho_final - Mat4::Identity() * 0.25).norm() < 0.02);
}

TEST_CASE("ensemble average with zero width reproduces the center trace") {
  SpinSystem sys = SpinSystem::isotropic(4500.0);
  double nu_uw = transition_table(sys, 82.525).get(3, 4).nu_MHz;
  auto sim = [&](double offset) {
    PropagateOptions opt;
    opt.electron_offset_MHz = offset;
    PulseSequence seq = rabi_sequence(0.0, 500.0, 0.946, nu_uw, 500.0);
    return propagate(sys, 82.525, seq, RelaxationModel{}, opt).trace;
  };
  AsymmetryTrace center = sim(0.0);
  AsymmetryTrace avg = ensemble_average(sim, 0.0, 11);
  REQUIRE(avg.size() == center.size());
  for (std::size_t i = 0; i < avg.size(); ++i)
    CHECK(avg.values[i] == doctest::Approx(center.values[i]).epsilon(1e-12));
}

TEST_CASE("sequence validation rejects overlapping segments") {
  PulseSequence seq;
  seq.segments.push_back({0.0, 100.0, 1.0, 0.0, 3631.0});
  seq.segments.push_back({50.0, 100.0, 1.0, 0.0, 3631.0});
  seq.t_end_ns = 200.0;
  CHECK_THROWS_AS(seq.validate(), std::invalid_argument);
}
