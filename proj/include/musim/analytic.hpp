#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "musim/levels.hpp"
#include "musim/trace.hpp"

namespace musim {

// Effective two-level Rabi frequency sqrt(nu1^2 + Omega^2).
double effective_rabi(double nu1_MHz, double omega_MHz);

struct RabiAmplitudes {
  double a_osc = 0.0;
  double a_static = 0.0;
  bool degenerate = false;  // nu1 = Omega = 0, a_osc set by continuity
};

// A_osc = p34 (1 - (Omega/omega_eff)^2), A_static = p_sigma - A_osc.
RabiAmplitudes rabi_amplitudes(double p34, double p_sigma, double nu1_MHz, double omega_MHz);

// Signed muon frequencies of the singly-tilted (static rotating-frame) axial
// Hamiltonian: omega12/omega34 carry the sign of the longitudinal component of
// the respective effective muon field, making omega_+ = omega12 + omega34 the
// small combination frequency.
struct StaticFrameFreqs {
  double omega12 = 0.0, omega34 = 0.0;   // MHz, signed
  double omega_plus = 0.0, omega_minus = 0.0;
};

StaticFrameFreqs muon_frame_freqs(const SpinSystem& sys, double b0_mT);

struct TiltedFrameAngles {
  double xi = 0.0, eta = 0.0;            // first frame
  double theta13 = 0.0, theta24 = 0.0;   // second frame
  double theta = 0.0;                    // (theta13 - theta24)/2
  double chi_zq = 0.0, chi_dq = 0.0;     // third frame, both branch signs
  bool on_resonance_zq = false, on_resonance_dq = false;  // denominator hit zero
};

// All frame-tilting angles for the driven axial system; nu1 is the
// rotating-frame drive amplitude (gamma_e B1 / 2).
TiltedFrameAngles tilted_angles(const SpinSystem& sys, double b0_mT, double nu_uw_MHz,
                                double nu1_MHz);

struct DemurPoint {
  double b0_mT = 0.0;
  double nu12_tr_MHz = 0.0, nu34_tr_MHz = 0.0;  // driven muon frequencies, magnitudes
  bool zq_crossed = false, dq_crossed = false;  // multi-quantum detuning changed sign
  bool flagged = false;                         // inside a discontinuity exclusion window
};

struct DemurOptions {
  double exclusion_window_mT = 0.05;  // around chi = -pi/2 / theta singularities
};

DemurPoint demur_eigenfrequencies(const SpinSystem& sys, double b0_mT, double nu_uw_MHz,
                                  double nu1_MHz, const DemurOptions& opt = {});

std::vector<DemurPoint> demur_sweep(const SpinSystem& sys, const std::vector<double>& b0_mT,
                                    double nu_uw_MHz, double nu1_MHz,
                                    const DemurOptions& opt = {});

// Fields in [b_lo, b_hi] where an analytic branch is discontinuous (multi-
// quantum crossings and theta denominator zeros).
std::vector<double> demur_discontinuities(const SpinSystem& sys, double nu_uw_MHz,
                                          double nu1_MHz, double b_lo_mT, double b_hi_mT);

struct ShiftPoint {
  double b1_mT = 0.0;
  double nu_rabi_MHz = 0.0;         // minimized effective frequency
  double shift_MHz = 0.0;           // static omega14 at the minimizing field - nu_uw
  double shift_analytic_MHz = 0.0;  // chi = -pi/2 crossing approximation
  double b0_min_mT = 0.0;
};

struct DqShiftOptions {
  int coarse_points = 51;
  double golden_tol_MHz = 1e-3;   // refinement tolerance on the offset (1 kHz)
  double span_factor = 1.5;       // coarse span: +/- span_factor * gamma_14 * B1
  double trace_ns = 3000.0;
  double dt_ns = 1.0;
};

// Numerically locates, for each B1, the field minimizing the driven <Iz>
// oscillation frequency at the double-quantum transition, and the analytic
// chi-based approximation. Throws with a diagnostic dump on bracket failure.
std::vector<ShiftPoint> dq_shift_curve(const SpinSystem& sys, double nu_uw_MHz,
                                       const std::vector<double>& b1_list_mT,
                                       const DqShiftOptions& opt = {});

struct AnalyticTrace {
  AsymmetryTrace trace;        // 2<Ix>(t) under CW drive
  bool truncation_valid = true;  // omega1 sin(eta) <= omega_+/10
};

// Closed-form TF trace: frame transform, diagonal evolution in the
// triply-tilted frame, back transform.
AnalyticTrace analytic_tf_trace(const SpinSystem& sys, double b0_mT, double nu_uw_MHz,
                                double nu1_MHz, const std::vector<double>& t_grid_ns);

}  // namespace musim
