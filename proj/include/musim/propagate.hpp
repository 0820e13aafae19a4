#pragma once

#include <functional>

#include "musim/relaxation.hpp"
#include "musim/sequence.hpp"
#include "musim/trace.hpp"

namespace musim {

enum class Frame { Rotating, Lab };

struct PropagateOptions {
  Frame frame = Frame::Rotating;
  double dt_ns = 1.0;                 // observable sampling grid
  double lab_dt_ns = 0.01;            // integration step in the lab frame
  double electron_offset_MHz = 0.0;   // extra offset on the electron Zeeman term
  double b1_scale = 1.0;              // multiplies every segment's B1
  double edge_ramp_ns = 0.0;          // linear rise/fall approximation, 0 = ideal edges
};

struct PropagationResult {
  AsymmetryTrace trace;   // polarization 2<I_z> (LF) or 2<I_x> (TF)
  Mat4 rho_final;
};

// rho0 = 1/4 + Iz/2 (LF) or 1/4 + Ix/2 (TF): muon fully polarized, electron
// unpolarized.
Mat4 initial_state(Geometry geometry);

PropagationResult propagate(const Mat4& rho0, const SpinSystem& sys, double b0_mT,
                            const PulseSequence& seq, const RelaxationModel& relax,
                            const PropagateOptions& opt);

// Convenience overload starting from the geometry's initial state.
PropagationResult propagate(const SpinSystem& sys, double b0_mT, const PulseSequence& seq,
                            const RelaxationModel& relax, const PropagateOptions& opt);

// Weighted average of traces simulated at Gauss-Hermite nodes of a Gaussian
// electron-offset distribution; sim_at_offset receives the offset in MHz.
AsymmetryTrace ensemble_average(const std::function<AsymmetryTrace(double)>& sim_at_offset,
                                double fwhm_MHz, int n_points);

}  // namespace musim
