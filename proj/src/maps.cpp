#include "musim/maps.hpp"

#include <atomic>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "musim/analytic.hpp"
#include "musim/constants.hpp"
#include "musim/fit.hpp"
#include "musim/levels.hpp"
#include "musim/parallel.hpp"
#include "musim/quadrature.hpp"

namespace musim {

namespace {

// Trace restricted to t >= t_lo, time-shifted to start at zero.
AsymmetryTrace tail_from(const AsymmetryTrace& t, double t_lo) {
  AsymmetryTrace out;
  for (std::size_t k = 0; k < t.size(); ++k) {
    if (t.times_ns[k] < t_lo - 1e-9) continue;
    out.times_ns.push_back(t.times_ns[k] - t_lo);
    out.values.push_back(t.values[k]);
  }
  return out;
}

}  // namespace

RabiMap rabi_map(const SpinSystem& sys, const std::vector<double>& b0_list,
                 const std::vector<double>& b1_list, const RabiMapOptions& opt) {
  sys.validate();
  if (b0_list.empty() || b1_list.empty())
    throw std::invalid_argument("rabi_map: empty axis");
  RabiMap map;
  map.b0_mT = b0_list;
  map.b1_mT = b1_list;
  std::size_t n = b0_list.size() * b1_list.size();
  map.nu_eff_MHz.assign(n, std::numeric_limits<double>::quiet_NaN());
  map.amplitude.assign(n, std::numeric_limits<double>::quiet_NaN());
  std::atomic<int> failed{0};

  auto cell = [&](std::size_t idx) {
    std::size_t i0 = idx / b1_list.size();
    std::size_t i1 = idx % b1_list.size();
    try {
      double b0 = b0_list[i0], b1 = b1_list[i1];
      double nu_uw = opt.nu_uw_MHz > 0.0
                         ? opt.nu_uw_MHz
                         : transition_table(sys, b0).get(opt.transition_i,
                                                         opt.transition_j).nu_MHz;
      PulseSequence seq =
          rabi_sequence(opt.t_p_ns, opt.pulse_ns, b1, nu_uw, opt.t_end_ns, Geometry::LF);
      PropagateOptions popt;
      popt.frame = opt.frame;
      popt.dt_ns = opt.dt_ns;
      auto res = propagate(sys, b0, seq, RelaxationModel{}, popt);
      AsymmetryTrace seg = tail_from(res.trace, opt.t_p_ns);
      Spectrum s = fft_spectrum(seg, Window::Hann, 8);
      double f_hi = opt.f_search_max_MHz > 0.0
                        ? std::min(opt.f_search_max_MHz, s.freqs_MHz.back())
                        : s.freqs_MHz.back();
      Peak pk = find_peak(s, 2.0 * s.bin_MHz(), f_hi);
      if (!pk.found) throw std::runtime_error("no peak");
      map.nu_eff_MHz[idx] = pk.freq_MHz;
      map.amplitude[idx] = pk.amplitude;
    } catch (const std::exception&) {
      ++failed;
    }
  };
  if (opt.serial)
    par::serial_for(n, cell);
  else
    par::parallel_for(n, cell, opt.workers);
  map.failed_cells = failed.load();
  return map;
}

namespace {

// FWHM of a tabulated density by linear interpolation of the half crossings.
double histogram_fwhm(const std::vector<double>& centers, const std::vector<double>& w) {
  std::size_t kmax = 0;
  for (std::size_t k = 1; k < w.size(); ++k)
    if (w[k] > w[kmax]) kmax = k;
  double half = w[kmax] / 2.0;
  if (half <= 0.0) return 0.0;
  double left = centers.front(), right = centers.back();
  for (std::size_t k = kmax; k-- > 0;) {
    if (w[k] <= half) {
      double f = (half - w[k]) / (w[k + 1] - w[k]);
      left = centers[k] + f * (centers[k + 1] - centers[k]);
      break;
    }
  }
  for (std::size_t k = kmax; k + 1 < w.size(); ++k) {
    if (w[k + 1] <= half) {
      double f = (w[k] - half) / (w[k] - w[k + 1]);
      right = centers[k] + f * (centers[k + 1] - centers[k]);
      break;
    }
  }
  return right - left;
}

double nu_eff_fwhm(double nu1_mean, double omega_mean, double sigma_omega,
                   double sigma_nu1) {
  // Both axes on dense grids: quadrature nodes on the nu1 axis would imprint
  // delta spikes on the value density (the hypot Jacobian diverges at
  // Omega = 0), collapsing the measured FWHM to the bin width.
  Quadrature q1;
  if (sigma_nu1 > 0.0) {
    const int n1 = 801;
    double lo = nu1_mean - 5.0 * sigma_nu1, step = 10.0 * sigma_nu1 / (n1 - 1);
    double wsum = 0.0;
    for (int j = 0; j < n1; ++j) {
      double x = lo + j * step;
      double z = (x - nu1_mean) / sigma_nu1;
      q1.nodes.push_back(x - nu1_mean);
      q1.weights.push_back(std::exp(-0.5 * z * z));
      wsum += q1.weights.back();
    }
    for (double& w : q1.weights) w /= wsum;
  } else {
    q1 = Quadrature{{0.0}, {1.0}};
  }
  const int n_om = 8001;
  double om_lo = omega_mean - 6.0 * sigma_omega, om_hi = omega_mean + 6.0 * sigma_omega;
  if (sigma_omega <= 0.0) { om_lo = omega_mean; om_hi = omega_mean; }

  // Value range for the histogram.
  double vmin = std::numeric_limits<double>::infinity(), vmax = 0.0;
  for (double dn : q1.nodes) {
    double nu1 = nu1_mean + dn;
    for (double om : {om_lo, 0.0, om_hi}) {
      if (om < om_lo || om > om_hi) continue;
      double v = std::hypot(nu1, om);
      vmin = std::min(vmin, v);
      vmax = std::max(vmax, v);
    }
  }
  if (!(vmax > vmin)) return 0.0;
  const int n_bins = 2000;
  double pad = 0.05 * (vmax - vmin);
  vmin -= pad;
  vmax += pad;
  double bw = (vmax - vmin) / n_bins;
  std::vector<double> hist(n_bins + 1, 0.0), centers(n_bins + 1);
  for (int k = 0; k <= n_bins; ++k) centers[k] = vmin + k * bw;

  double dom = sigma_omega > 0.0 ? (om_hi - om_lo) / (n_om - 1) : 0.0;
  for (std::size_t a = 0; a < q1.nodes.size(); ++a) {
    double nu1 = nu1_mean + q1.nodes[a];
    if (sigma_omega <= 0.0) {
      double v = std::hypot(nu1, omega_mean);
      double x = (v - vmin) / bw;
      int k = int(x);
      if (k >= 0 && k < n_bins) {
        double f = x - k;
        hist[k] += q1.weights[a] * (1.0 - f);
        hist[k + 1] += q1.weights[a] * f;
      }
      continue;
    }
    for (int j = 0; j < n_om; ++j) {
      double om = om_lo + j * dom;
      double z = (om - omega_mean) / sigma_omega;
      double wt = q1.weights[a] * std::exp(-0.5 * z * z) * dom;
      double v = std::hypot(nu1, om);
      double x = (v - vmin) / bw;
      int k = int(x);
      if (k >= 0 && k < n_bins) {
        double f = x - k;
        hist[k] += wt * (1.0 - f);
        hist[k + 1] += wt * f;
      }
    }
  }
  return histogram_fwhm(centers, hist);
}

}  // namespace

FwhmSurface narrowing_fwhm_map(const std::vector<double>& nu1_means,
                               const std::vector<double>& omega_means,
                               double omega_fwhm_MHz, double nu1_fwhm_MHz) {
  if (omega_fwhm_MHz < 0.0 || nu1_fwhm_MHz < 0.0)
    throw std::invalid_argument("narrowing_fwhm_map: negative FWHM");
  FwhmSurface s;
  s.nu1_MHz = nu1_means;
  s.omega_MHz = omega_means;
  s.fwhm_MHz.assign(nu1_means.size() * omega_means.size(), 0.0);
  double sig_om = omega_fwhm_MHz / kFwhmPerSigma;
  double sig_n1 = nu1_fwhm_MHz / kFwhmPerSigma;
  par::parallel_for(s.fwhm_MHz.size(), [&](std::size_t idx) {
    std::size_t i = idx / omega_means.size(), j = idx % omega_means.size();
    s.fwhm_MHz[idx] = nu_eff_fwhm(nu1_means[i], omega_means[j], sig_om, sig_n1);
  });
  return s;
}

std::vector<DampingPoint> rabi_damping_vs_drive(const SpinSystem& sys, double nu_uw_MHz,
                                                const std::vector<double>& b1_list_mT,
                                                double line_fwhm_MHz,
                                                const DampingScanOptions& opt) {
  std::vector<DampingPoint> out(b1_list_mT.size());
  DqShiftOptions sopt;
  sopt.trace_ns = opt.trace_ns;
  sopt.dt_ns = opt.dt_ns;
  std::vector<ShiftPoint> shifts = dq_shift_curve(sys, nu_uw_MHz, b1_list_mT, sopt);
  par::parallel_for(b1_list_mT.size(), [&](std::size_t k) {
    double b1 = b1_list_mT[k];
    double b0 = shifts[k].b0_min_mT;
    PulseSequence seq = demur_cw_sequence(b1, nu_uw_MHz, opt.trace_ns, Geometry::LF);
    auto sim = [&](double offset) {
      PropagateOptions popt;
      popt.dt_ns = opt.dt_ns;
      popt.electron_offset_MHz = offset;
      return propagate(sys, b0, seq, RelaxationModel{}, popt).trace;
    };
    AsymmetryTrace avg = ensemble_average(sim, line_fwhm_MHz, opt.gh_points);
    if (opt.fit_periods > 0.0 && shifts[k].nu_rabi_MHz > 0.0) {
      double t_hi = opt.t_p_ns + opt.fit_periods * 1000.0 / shifts[k].nu_rabi_MHz;
      AsymmetryTrace cut;
      for (std::size_t i = 0; i < avg.size(); ++i) {
        if (avg.times_ns[i] > t_hi) break;
        cut.times_ns.push_back(avg.times_ns[i]);
        cut.values.push_back(avg.values[i]);
      }
      if (cut.size() >= 32) avg = cut;
    }
    avg.sigma.assign(avg.size(), 1.0);

    DampingPoint& p = out[k];
    p.b1_mT = b1;
    p.nu_rabi_MHz = shifts[k].nu_rabi_MHz;
    ModelSpec model;
    model.components = {damped_cosine("A", "nu", "lam", "phi"), constant("c")};
    std::map<std::string, double> init = {{"A", 0.3},
                                          {"nu", shifts[k].nu_rabi_MHz},
                                          {"lam", 1.0},
                                          {"phi", 0.0},
                                          {"c", 0.5}};
    std::map<std::string, std::pair<double, double>> bounds = {
        {"nu", {0.0, 1e3}}, {"lam", {0.0, 1e3}}};
    FitOptions fopt;
    fopt.multistart = 3;
    FitReport rep = fit_model(avg, model, init, bounds, fopt);
    p.fit_ok = rep.converged;
    if (rep.converged) {
      p.nu_rabi_MHz = rep.value("nu");
      p.damping_per_us = rep.value("lam");
    }
  }, opt.workers);
  return out;
}

}  // namespace musim
