#pragma once

#include <cstdint>

#include "musim/trace.hpp"

namespace musim {

struct DecayHistograms {
  std::vector<double> t_ns;   // bin centers
  std::vector<double> n_f;    // forward counts
  std::vector<double> n_b;    // backward counts
  std::uint64_t clipped = 0;  // negative expected rates clipped at 0
};

struct SynthOptions {
  std::uint64_t n_muons = 1000000;
  double alpha = 1.0;       // detector balance
  double a0_max = 0.27;     // full asymmetry scale
  double f_dia = 0.0;       // diamagnetic fraction in P(t)
  double b0_mT = 0.0;       // sets the diamagnetic precession frequency
  double phi_dia_rad = 0.0;
  std::uint64_t seed = 1;
};

// Poisson-sampled positron count histograms for the polarization trace P(t):
// N_{F,B}(t) ~ exp(-t/tau_mu) (1 -/+ A0max P(t)), detector balance alpha,
// with an added diamagnetic cos(2pi gamma_mu B0 t + phi) component.
DecayHistograms synth_decay_histograms(const AsymmetryTrace& polarization,
                                       const SynthOptions& opt);

// Standard muSR asymmetry construction A = (N_B - alpha N_F)/(N_B + alpha N_F)
// with Gaussian error propagation of the Poisson counts; bins with fewer than
// min_counts total counts are dropped.
AsymmetryTrace asymmetry_from_histograms(const DecayHistograms& h, double alpha,
                                         double min_counts = 10.0);

}  // namespace musim
