#include "musim/synth.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include "musim/constants.hpp"

namespace musim {

DecayHistograms synth_decay_histograms(const AsymmetryTrace& polarization,
                                       const SynthOptions& opt) {
  polarization.validate();
  if (polarization.size() < 2) throw std::invalid_argument("synth: trace too short");
  if (opt.alpha <= 0.0) throw std::invalid_argument("synth: alpha must be positive");
  if (opt.a0_max < 0.0 || opt.a0_max > 1.0)
    throw std::invalid_argument("synth: a0_max must be in [0,1]");
  if (opt.f_dia < 0.0 || opt.f_dia > 1.0)
    throw std::invalid_argument("synth: f_dia must be in [0,1]");

  polarization.uniform_dt();  // require a uniform grid
  std::size_t n = polarization.size();
  // Rate normalization: total expected counts across both detectors ~ n_muons.
  double sum_decay = 0.0;
  for (double t : polarization.times_ns) sum_decay += std::exp(-t / kMuonLifetime_ns);
  double n0 = double(opt.n_muons) / (sum_decay * (1.0 + 1.0 / opt.alpha));

  std::mt19937_64 rng(opt.seed);
  DecayHistograms h;
  h.t_ns = polarization.times_ns;
  h.n_f.resize(n);
  h.n_b.resize(n);
  double nu_dia = kGammaMu_MHz_per_mT * opt.b0_mT;
  for (std::size_t k = 0; k < n; ++k) {
    double t = polarization.times_ns[k];
    double p = (1.0 - opt.f_dia) * polarization.values[k];
    if (opt.f_dia > 0.0)
      p += opt.f_dia * std::cos(kTwoPiMHzns * nu_dia * t + opt.phi_dia_rad);
    double decay = std::exp(-t / kMuonLifetime_ns);
    double mu_b = n0 * decay * (1.0 + opt.a0_max * p);
    double mu_f = (n0 / opt.alpha) * decay * (1.0 - opt.a0_max * p);
    if (mu_b < 0.0) { mu_b = 0.0; ++h.clipped; }
    if (mu_f < 0.0) { mu_f = 0.0; ++h.clipped; }
    h.n_b[k] = mu_b > 0.0 ? double(std::poisson_distribution<long long>(mu_b)(rng)) : 0.0;
    h.n_f[k] = mu_f > 0.0 ? double(std::poisson_distribution<long long>(mu_f)(rng)) : 0.0;
  }
  return h;
}

AsymmetryTrace asymmetry_from_histograms(const DecayHistograms& h, double alpha,
                                         double min_counts) {
  if (alpha <= 0.0) throw std::invalid_argument("asymmetry: alpha must be positive");
  if (h.t_ns.size() != h.n_f.size() || h.t_ns.size() != h.n_b.size())
    throw std::invalid_argument("asymmetry: histogram length mismatch");
  AsymmetryTrace out;
  for (std::size_t k = 0; k < h.t_ns.size(); ++k) {
    double nf = h.n_f[k], nb = h.n_b[k];
    if (nf + nb < min_counts) continue;
    double denom = nb + alpha * nf;
    if (denom <= 0.0) continue;
    out.times_ns.push_back(h.t_ns[k]);
    out.values.push_back((nb - alpha * nf) / denom);
    double var = 4.0 * alpha * alpha * nf * nb * (nf + nb) / (denom * denom * denom * denom);
    out.sigma.push_back(var > 0.0 ? std::sqrt(var) : 1.0 / denom);
  }
  out.validate();
  return out;
}

}  // namespace musim
