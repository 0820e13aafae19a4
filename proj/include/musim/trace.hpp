#pragma once

#include <stdexcept>
#include <vector>

namespace musim {

// Time-stamped observable values (dimensionless polarization or decay
// asymmetry), with optional per-point standard errors.
struct AsymmetryTrace {
  std::vector<double> times_ns;   // strictly increasing
  std::vector<double> values;
  std::vector<double> sigma;      // empty when absent

  bool has_sigma() const { return !sigma.empty(); }
  std::size_t size() const { return times_ns.size(); }

  void validate() const {
    if (times_ns.size() != values.size())
      throw std::invalid_argument("trace: times/values length mismatch");
    if (!sigma.empty() && sigma.size() != values.size())
      throw std::invalid_argument("trace: sigma length mismatch");
    for (std::size_t k = 1; k < times_ns.size(); ++k)
      if (!(times_ns[k] > times_ns[k - 1]))
        throw std::invalid_argument("trace: times not strictly increasing");
  }

  // Uniform-grid check; returns the step or throws.
  double uniform_dt(double tol = 1e-9) const {
    if (times_ns.size() < 2) throw std::invalid_argument("trace too short");
    double dt = times_ns[1] - times_ns[0];
    for (std::size_t k = 1; k < times_ns.size(); ++k) {
      double d = times_ns[k] - times_ns[k - 1];
      if (std::abs(d - dt) > tol * std::max(1.0, std::abs(dt)))
        throw std::invalid_argument("trace: non-uniform time grid");
    }
    return dt;
  }

  double mean_in_window(double t_lo, double t_hi) const {
    double s = 0.0;
    std::size_t n = 0;
    for (std::size_t k = 0; k < times_ns.size(); ++k)
      if (times_ns[k] >= t_lo && times_ns[k] <= t_hi) { s += values[k]; ++n; }
    if (n == 0) throw std::invalid_argument("trace: empty window");
    return s / double(n);
  }
};

}  // namespace musim
