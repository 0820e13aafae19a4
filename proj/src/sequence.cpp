#include "musim/sequence.hpp"

#include <cmath>
#include <stdexcept>

namespace musim {

void PulseSequence::validate() const {
  if (segments.size() > max_segments)
    throw std::invalid_argument("sequence: segment count exceeds limit");
  double prev_end = -1.0;
  for (const auto& s : segments) {
    if (!(s.t_start_ns >= 0.0) || !(s.duration_ns >= 0.0) || !std::isfinite(s.b1_mT) ||
        !std::isfinite(s.freq_MHz) || !std::isfinite(s.phase_rad))
      throw std::invalid_argument("sequence: invalid segment parameters");
    if (s.t_start_ns < prev_end)
      throw std::invalid_argument("sequence: overlapping or unordered segments");
    prev_end = s.t_start_ns + s.duration_ns;
  }
  if (t_end_ns < prev_end)
    throw std::invalid_argument("sequence: t_end before last segment end");
}

PulseSequence rabi_sequence(double t_p_ns, double pulse_ns, double b1_mT, double freq_MHz,
                            double t_end_ns, Geometry geom) {
  PulseSequence q;
  q.segments.push_back({t_p_ns, pulse_ns, b1_mT, 0.0, freq_MHz});
  q.t_end_ns = t_end_ns;
  q.geometry = geom;
  q.validate();
  return q;
}

PulseSequence ramsey_sequence(double t_p_ns, double pulse_ns, double tau_ns, double b1_mT,
                              double freq_MHz, double phase2_rad, double t_end_ns,
                              Geometry geom) {
  PulseSequence q;
  q.segments.push_back({t_p_ns, pulse_ns, b1_mT, 0.0, freq_MHz});
  q.segments.push_back({t_p_ns + pulse_ns + tau_ns, pulse_ns, b1_mT, phase2_rad, freq_MHz});
  q.t_end_ns = t_end_ns;
  q.geometry = geom;
  q.validate();
  return q;
}

PulseSequence transient_nutation_sequence(double t_p_ns, double t_nut_ns, double b1_mT,
                                          double freq_MHz, double t_end_ns, Geometry geom) {
  return rabi_sequence(t_p_ns, t_nut_ns, b1_mT, freq_MHz, t_end_ns, geom);
}

PulseSequence inversion_recovery_sequence(double t_p_ns, double pi_pulse_ns, double b1_mT,
                                          double freq_MHz, double recovery_ns, Geometry geom) {
  PulseSequence q;
  q.segments.push_back({t_p_ns, pi_pulse_ns, b1_mT, 0.0, freq_MHz});
  q.t_end_ns = t_p_ns + pi_pulse_ns + recovery_ns;
  q.geometry = geom;
  q.validate();
  return q;
}

PulseSequence demur_cw_sequence(double b1_mT, double freq_MHz, double t_end_ns, Geometry geom) {
  PulseSequence q;
  q.segments.push_back({0.0, t_end_ns, b1_mT, 0.0, freq_MHz});
  q.t_end_ns = t_end_ns;
  q.geometry = geom;
  q.validate();
  return q;
}

}  // namespace musim
