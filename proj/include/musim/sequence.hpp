#pragma once

#include <vector>

namespace musim {

// One rectangular microwave segment, timed relative to muon arrival.
struct PulseSegment {
  double t_start_ns = 0.0;
  double duration_ns = 0.0;
  double b1_mT = 0.0;       // drive amplitude of the linear oscillating field
  double phase_rad = 0.0;
  double freq_MHz = 0.0;    // drive frequency (linear)
};

enum class Geometry { LF, TF };  // observe <Iz> vs <Ix>,<Iy>

struct PulseSequence {
  std::vector<PulseSegment> segments;  // time-ordered, non-overlapping
  double t_end_ns = 0.0;               // total simulated window
  Geometry geometry = Geometry::LF;
  // Hardware mirrors at most four pulses; lift explicitly when needed.
  unsigned max_segments = 4;

  void validate() const;  // throws std::invalid_argument on contract breach
};

// Named sequence templates.

// Single pulse of given length after delay t_p; window extends to t_end.
PulseSequence rabi_sequence(double t_p_ns, double pulse_ns, double b1_mT,
                            double freq_MHz, double t_end_ns,
                            Geometry geom = Geometry::LF);

// Two pulses of equal length separated by tau; phase2 applies to the second.
PulseSequence ramsey_sequence(double t_p_ns, double pulse_ns, double tau_ns,
                              double b1_mT, double freq_MHz, double phase2_rad,
                              double t_end_ns, Geometry geom = Geometry::LF);

// Nutation pulse of variable duration t_nut followed by free evolution.
PulseSequence transient_nutation_sequence(double t_p_ns, double t_nut_ns, double b1_mT,
                                          double freq_MHz, double t_end_ns,
                                          Geometry geom = Geometry::LF);

// Inversion pulse followed by a recovery delay.
PulseSequence inversion_recovery_sequence(double t_p_ns, double pi_pulse_ns, double b1_mT,
                                          double freq_MHz, double recovery_ns,
                                          Geometry geom = Geometry::LF);

// Continuous drive over the whole window (TF DEMUR).
PulseSequence demur_cw_sequence(double b1_mT, double freq_MHz, double t_end_ns,
                                Geometry geom = Geometry::TF);

}  // namespace musim
