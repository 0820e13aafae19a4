#pragma once

#include "musim/propagate.hpp"
#include "musim/spectrum.hpp"

namespace musim {

struct RabiMap {
  std::vector<double> b0_mT;
  std::vector<double> b1_mT;
  // row-major [i_b0][i_b1]; NaN marks failed extraction
  std::vector<double> nu_eff_MHz;
  std::vector<double> amplitude;
  int failed_cells = 0;

  double& nu_at(std::size_t i0, std::size_t i1) { return nu_eff_MHz[i0 * b1_mT.size() + i1]; }
  double nu_at(std::size_t i0, std::size_t i1) const { return nu_eff_MHz[i0 * b1_mT.size() + i1]; }
  double amp_at(std::size_t i0, std::size_t i1) const { return amplitude[i0 * b1_mT.size() + i1]; }
};

struct RabiMapOptions {
  double t_p_ns = 0.0;
  double pulse_ns = 2000.0;
  double t_end_ns = 2000.0;
  double dt_ns = 1.0;
  double nu_uw_MHz = 0.0;     // 0 = resonant with the named transition per B0
  int transition_i = 3, transition_j = 4;
  Frame frame = Frame::Rotating;
  double f_search_max_MHz = 0.0;  // peak-search upper bound; 0 = Nyquist.
                                  // Intermediate-field traces carry fast
                                  // flip-flop coherences that alias into the
                                  // sampled band, so cap the search at the
                                  // expected Rabi range.
  int workers = 0;            // 0 = machine parallelism
  bool serial = false;        // serial reference path
};

// nu_eff(B0, B1): simulate the drive at every grid point, extract the dominant
// oscillation frequency (FFT peak + parabolic interpolation) and amplitude.
RabiMap rabi_map(const SpinSystem& sys, const std::vector<double>& b0_list,
                 const std::vector<double>& b1_list, const RabiMapOptions& opt);

struct FwhmSurface {
  std::vector<double> nu1_MHz;    // mean drive axis
  std::vector<double> omega_MHz;  // mean offset axis
  std::vector<double> fwhm_MHz;   // row-major [i_nu1][i_omega]
  double at(std::size_t i, std::size_t j) const { return fwhm_MHz[i * omega_MHz.size() + j]; }
};

// Propagates independent Gaussian distributions of nu1 and Omega through
// nu_eff = sqrt(nu1^2 + Omega^2) and reports the FWHM of the result.
FwhmSurface narrowing_fwhm_map(const std::vector<double>& nu1_means,
                               const std::vector<double>& omega_means,
                               double omega_fwhm_MHz, double nu1_fwhm_MHz);

struct DampingPoint {
  double b1_mT = 0.0;
  double nu_rabi_MHz = 0.0;
  double damping_per_us = 0.0;
  bool fit_ok = true;
};

struct DampingScanOptions {
  int gh_points = 21;
  double trace_ns = 3000.0;
  double dt_ns = 1.0;
  double t_p_ns = 0.0;
  double fit_periods = 0.0;  // fit window in Rabi periods; 0 = whole trace.
                             // Inhomogeneous decay is not exponential, so a
                             // window scaled to the oscillation keeps the
                             // effective rate comparable across drive levels.
  int workers = 0;
};

// Ensemble-averaged double-quantum Rabi traces under a Gaussian electron line,
// fitted to a damped cosine; B0 per drive level is tuned to the effective
// (shifted) resonance.
std::vector<DampingPoint> rabi_damping_vs_drive(const SpinSystem& sys, double nu_uw_MHz,
                                                const std::vector<double>& b1_list_mT,
                                                double line_fwhm_MHz,
                                                const DampingScanOptions& opt = {});

}  // namespace musim
