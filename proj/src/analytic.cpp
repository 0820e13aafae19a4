#include "musim/analytic.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "musim/constants.hpp"
#include "musim/propagate.hpp"
#include "musim/spectrum.hpp"

namespace musim {

double effective_rabi(double nu1_MHz, double omega_MHz) {
  return std::hypot(nu1_MHz, omega_MHz);
}

RabiAmplitudes rabi_amplitudes(double p34, double p_sigma, double nu1_MHz, double omega_MHz) {
  RabiAmplitudes a;
  double w_eff = effective_rabi(nu1_MHz, omega_MHz);
  if (w_eff == 0.0) {
    // no drive, no detuning: nothing oscillates; continuity limit along nu1=0
    a.a_osc = 0.0;
    a.degenerate = true;
  } else {
    double r = omega_MHz / w_eff;
    a.a_osc = p34 * (1.0 - r * r);
  }
  a.a_static = p_sigma - a.a_osc;
  return a;
}

namespace {

struct MuonFields {
  double z_p, x_p, z_m, x_m;  // per electron manifold m_S = +-1/2
  double phi_p, phi_m;        // tilt of the effective muon field
};

MuonFields muon_fields(const SpinSystem& sys, double b0_mT) {
  if (sys.coupling != Coupling::Axial)
    throw std::invalid_argument("tilted-frame analysis requires an axial coupling");
  MuonFields f;
  double nu_i = sys.nu_i(b0_mT);
  f.z_p = -nu_i + sys.a_par / 2.0;
  f.z_m = -nu_i - sys.a_par / 2.0;
  f.x_p = sys.a_perp / 2.0;
  f.x_m = -sys.a_perp / 2.0;
  f.phi_p = std::atan(f.x_p / f.z_p);
  f.phi_m = std::atan(f.x_m / f.z_m);
  return f;
}

double sgn(double x) { return x < 0.0 ? -1.0 : 1.0; }

}  // namespace

StaticFrameFreqs muon_frame_freqs(const SpinSystem& sys, double b0_mT) {
  MuonFields f = muon_fields(sys, b0_mT);
  StaticFrameFreqs s;
  s.omega12 = sgn(f.z_p) * std::hypot(f.z_p, f.x_p);
  s.omega34 = sgn(f.z_m) * std::hypot(f.z_m, f.x_m);
  s.omega_plus = s.omega12 + s.omega34;
  s.omega_minus = s.omega12 - s.omega34;
  return s;
}

TiltedFrameAngles tilted_angles(const SpinSystem& sys, double b0_mT, double nu_uw_MHz,
                                double nu1_MHz) {
  MuonFields f = muon_fields(sys, b0_mT);
  StaticFrameFreqs sf = muon_frame_freqs(sys, b0_mT);
  TiltedFrameAngles a;
  a.xi = (f.phi_p + f.phi_m) / 2.0;
  a.eta = (f.phi_p - f.phi_m) / 2.0;

  double omega_s = sys.nu_s(b0_mT) - nu_uw_MHz;  // resonance offset
  double num = -nu1_MHz * std::cos(a.eta);
  a.theta13 = std::atan2(num, omega_s + sf.omega_minus / 2.0);
  a.theta24 = std::atan2(num, omega_s - sf.omega_minus / 2.0);
  // atan2 keeps the rotation in (-pi/2, pi/2] only when the denominator is
  // positive; fold back so the two-level mixing angle stays in that range.
  auto fold = [](double th) {
    if (th > kPi / 2.0) return th - kPi;
    if (th <= -kPi / 2.0) return th + kPi;
    return th;
  };
  a.theta13 = fold(a.theta13);
  a.theta24 = fold(a.theta24);
  a.theta = (a.theta13 - a.theta24) / 2.0;

  double w13 = (omega_s + sf.omega_minus / 2.0) * std::cos(a.theta13) +
               num * std::sin(a.theta13);
  double w24 = (omega_s - sf.omega_minus / 2.0) * std::cos(a.theta24) +
               num * std::sin(a.theta24);
  double omega_s_dt = (w13 + w24) / 2.0;

  // Remaining pair gaps in the doubly-tilted frame: the zero-quantum pair
  // (+-),(−+) and the double-quantum pair (++),(--).
  double zq_den = sf.omega_plus / 2.0 - omega_s_dt;
  double dq_den = -sf.omega_plus / 2.0 - omega_s_dt;
  double chi_num = nu1_MHz * std::sin(a.eta) * std::cos(a.theta);
  a.on_resonance_zq = (zq_den == 0.0);
  a.on_resonance_dq = (dq_den == 0.0);
  a.chi_zq = a.on_resonance_zq ? -kPi / 2.0 * sgn(chi_num) : std::atan(chi_num / zq_den);
  a.chi_dq = a.on_resonance_dq ? -kPi / 2.0 * sgn(chi_num) : std::atan(chi_num / dq_den);
  return a;
}

namespace {

// Everything the triply-tilted diagonalization produces at one field point.
struct TiltedSolution {
  StaticFrameFreqs sf;
  TiltedFrameAngles ang;
  double omega_s = 0.0;                 // resonance offset
  double omega_s_dt = 0.0;              // electron splitting, doubly-tilted frame
  double omega_minus_dt = 0.0;          // w13 - w24 (twice the SzIz coefficient)
  double zq_den = 0.0, dq_den = 0.0;    // pair gaps before the last rotation
  double v_MHz = 0.0;                   // residual pair coupling (half chi numerator)
  double e_tr[4] = {0, 0, 0, 0};        // level energies |++>,|+->,|-+>,|--> after it
};

TiltedSolution solve_tilted(const SpinSystem& sys, double b0_mT, double nu_uw_MHz,
                            double nu1_MHz) {
  TiltedSolution ts;
  ts.sf = muon_frame_freqs(sys, b0_mT);
  ts.ang = tilted_angles(sys, b0_mT, nu_uw_MHz, nu1_MHz);
  ts.omega_s = sys.nu_s(b0_mT) - nu_uw_MHz;
  double num = -nu1_MHz * std::cos(ts.ang.eta);
  double w13 = (ts.omega_s + ts.sf.omega_minus / 2.0) * std::cos(ts.ang.theta13) +
               num * std::sin(ts.ang.theta13);
  double w24 = (ts.omega_s - ts.sf.omega_minus / 2.0) * std::cos(ts.ang.theta24) +
               num * std::sin(ts.ang.theta24);
  ts.omega_s_dt = (w13 + w24) / 2.0;
  ts.omega_minus_dt = w13 - w24;
  ts.zq_den = ts.sf.omega_plus / 2.0 - ts.omega_s_dt;
  ts.dq_den = -ts.sf.omega_plus / 2.0 - ts.omega_s_dt;
  ts.v_MHz = nu1_MHz * std::sin(ts.ang.eta) * std::cos(ts.ang.theta) / 2.0;
  // Diagonalize the two residually coupled pairs. Each pair keeps its mean
  // and its members repel to +-hypot(gap/2, v) about it; the sign of the gap
  // decides which member ends up on top.
  double c = ts.omega_minus_dt / 2.0;  // coefficient of 2 SzIz
  double hz = std::hypot(ts.zq_den / 2.0, ts.v_MHz);
  double hd = std::hypot(ts.dq_den / 2.0, ts.v_MHz);
  double sz = sgn(ts.zq_den), sd = sgn(ts.dq_den);
  ts.e_tr[0] = c / 2.0 - sd * hd;   // |++>
  ts.e_tr[1] = -c / 2.0 - sz * hz;  // |+->
  ts.e_tr[2] = -c / 2.0 + sz * hz;  // |-+>
  ts.e_tr[3] = c / 2.0 + sd * hd;   // |-->
  return ts;
}

}  // namespace

DemurPoint demur_eigenfrequencies(const SpinSystem& sys, double b0_mT, double nu_uw_MHz,
                                  double nu1_MHz, const DemurOptions& opt) {
  (void)opt;
  TiltedSolution ts = solve_tilted(sys, b0_mT, nu_uw_MHz, nu1_MHz);
  DemurPoint p;
  p.b0_mT = b0_mT;
  // Muon-flip lines in each electron manifold. The level pairing flips when
  // a pair gap changes sign (multi-quantum crossing); the hypot repulsion
  // handles that continuously except for the avoided-crossing jump itself,
  // which demur_discontinuities locates and flags.
  p.nu12_tr_MHz = std::abs(ts.e_tr[0] - ts.e_tr[1]);
  p.nu34_tr_MHz = std::abs(ts.e_tr[2] - ts.e_tr[3]);
  p.zq_crossed = ts.zq_den < 0.0;
  p.dq_crossed = ts.dq_den < 0.0;
  p.flagged = ts.ang.on_resonance_zq || ts.ang.on_resonance_dq;
  return p;
}

std::vector<double> demur_discontinuities(const SpinSystem& sys, double nu_uw_MHz,
                                          double nu1_MHz, double b_lo_mT, double b_hi_mT) {
  if (!(b_hi_mT > b_lo_mT)) throw std::invalid_argument("demur_discontinuities: bad range");
  // Branch jumps sit at zeros of the mixing-angle denominators.
  auto fns = std::vector<std::function<double(double)>>{
      [&](double b) { return sys.nu_s(b) - nu_uw_MHz +
                             muon_frame_freqs(sys, b).omega_minus / 2.0; },
      [&](double b) { return sys.nu_s(b) - nu_uw_MHz -
                             muon_frame_freqs(sys, b).omega_minus / 2.0; },
      [&](double b) { return solve_tilted(sys, b, nu_uw_MHz, nu1_MHz).zq_den; },
      [&](double b) { return solve_tilted(sys, b, nu_uw_MHz, nu1_MHz).dq_den; }};
  std::vector<double> roots;
  const int n = 4000;
  double h = (b_hi_mT - b_lo_mT) / n;
  for (const auto& f : fns) {
    double prev = f(b_lo_mT);
    for (int k = 1; k <= n; ++k) {
      double b = b_lo_mT + k * h;
      double cur = f(b);
      if (prev == 0.0 || (prev < 0.0) != (cur < 0.0)) {
        double lo = b - h, hi = b, flo = prev;
        for (int it = 0; it < 60; ++it) {
          double mid = 0.5 * (lo + hi), fm = f(mid);
          if ((flo < 0.0) == (fm < 0.0)) { lo = mid; flo = fm; } else hi = mid;
        }
        roots.push_back(0.5 * (lo + hi));
      }
      prev = cur;
    }
  }
  std::sort(roots.begin(), roots.end());
  roots.erase(std::unique(roots.begin(), roots.end(),
                          [](double a, double b) { return std::abs(a - b) < 1e-6; }),
              roots.end());
  return roots;
}

std::vector<DemurPoint> demur_sweep(const SpinSystem& sys, const std::vector<double>& b0_mT,
                                    double nu_uw_MHz, double nu1_MHz,
                                    const DemurOptions& opt) {
  std::vector<DemurPoint> out;
  out.reserve(b0_mT.size());
  std::vector<double> disc;
  if (!b0_mT.empty()) {
    auto [lo, hi] = std::minmax_element(b0_mT.begin(), b0_mT.end());
    if (*hi > *lo)
      disc = demur_discontinuities(sys, nu_uw_MHz, nu1_MHz, *lo - opt.exclusion_window_mT,
                                   *hi + opt.exclusion_window_mT);
  }
  for (double b : b0_mT) {
    DemurPoint p = demur_eigenfrequencies(sys, b, nu_uw_MHz, nu1_MHz, opt);
    for (double d : disc)
      if (std::abs(b - d) <= opt.exclusion_window_mT) p.flagged = true;
    out.push_back(p);
  }
  return out;
}

namespace {

// Dominant oscillation frequency of the driven longitudinal muon signal.
double driven_lf_frequency(const SpinSystem& sys, double b0_mT, double nu_uw_MHz,
                           double b1_mT, double f_max_MHz, const DqShiftOptions& opt) {
  PulseSequence seq = demur_cw_sequence(b1_mT, nu_uw_MHz, opt.trace_ns, Geometry::LF);
  PropagateOptions popt;
  popt.dt_ns = opt.dt_ns;
  auto res = propagate(sys, b0_mT, seq, RelaxationModel{}, popt);
  Spectrum s = fft_spectrum(res.trace, Window::Hann, 8);
  double f_hi = std::min(f_max_MHz, s.freqs_MHz.back());
  Peak pk = find_peak(s, 2.0 * s.bin_MHz(), f_hi);
  if (!pk.found)
    throw std::runtime_error("dq_shift_curve: no oscillation peak found");
  return pk.freq_MHz;
}

}  // namespace

std::vector<ShiftPoint> dq_shift_curve(const SpinSystem& sys, double nu_uw_MHz,
                                       const std::vector<double>& b1_list_mT,
                                       const DqShiftOptions& opt) {
  std::vector<ShiftPoint> out;
  // Unperturbed resonance of the outer (1-4) transition and local field slope.
  double b_res = resonance_field(sys, 1, 4, nu_uw_MHz, 1.0, 1000.0);
  auto nu14 = [&](double b) { return transition_table(sys, b).get(1, 4).nu_MHz; };
  double slope = (nu14(b_res + 0.05) - nu14(b_res - 0.05)) / 0.1;  // MHz per mT
  if (slope <= 0.0) throw std::runtime_error("dq_shift_curve: non-positive slope");

  double gamma14 = transition_table(sys, b_res).get(1, 4).gamma_MHz_per_mT;
  if (gamma14 <= 0.0) throw std::runtime_error("dq_shift_curve: transition not driven");

  // Reference root of the crossing-angle condition at vanishing drive; the
  // truncated frame model carries a static offset that this removes.
  // The gap has jump discontinuities where a mixing-angle denominator
  // changes sign, so scan first and bisect only the sign change nearest the
  // unperturbed resonance.
  auto den_root = [&](double nu1) {
    auto dq_den = [&](double b) { return solve_tilted(sys, b, nu_uw_MHz, nu1).dq_den; };
    const int n = 128;
    const double half = 0.7;
    double best = std::numeric_limits<double>::quiet_NaN();
    double prev_b = b_res - half, prev_f = dq_den(prev_b);
    for (int k = 1; k <= n; ++k) {
      double b = b_res - half + 2.0 * half * k / n;
      double f = dq_den(b);
      if ((prev_f < 0.0) != (f < 0.0)) {
        double lo = prev_b, hi = b, fl = prev_f;
        for (int it = 0; it < 60; ++it) {
          double mid = 0.5 * (lo + hi), fm = dq_den(mid);
          if ((fl < 0.0) == (fm < 0.0)) { lo = mid; fl = fm; } else hi = mid;
        }
        double r = 0.5 * (lo + hi);
        if (std::isnan(best) || std::abs(r - b_res) < std::abs(best - b_res)) best = r;
      }
      prev_b = b;
      prev_f = f;
    }
    return best;
  };
  double b_ref_analytic = den_root(1e-6);

  for (double b1 : b1_list_mT) {
    double nu_dq = gamma14 * b1;  // unperturbed Rabi rate of this transition
    double span_B = opt.span_factor * nu_dq / slope;
    // Cap the peak search at the response band: far aliased coherences (muon
    // precession lines, fast flip-flop terms) must not win the search.
    double f_cap = 2.0 * nu_dq + 2.0;
    double lo = b_res - span_B, hi = b_res + span_B;
    int n = std::max(5, opt.coarse_points);
    int best = -1;
    double best_f = 0.0;
    std::vector<double> fs(n);
    for (int k = 0; k < n; ++k) {
      double b = lo + (hi - lo) * k / (n - 1);
      fs[k] = driven_lf_frequency(sys, b, nu_uw_MHz, b1, f_cap, opt);
      if (best < 0 || fs[k] < best_f) { best = k; best_f = fs[k]; }
    }
    if (best == 0 || best == n - 1) {
      std::ostringstream msg;
      msg << "dq_shift_curve: minimum not bracketed for B1=" << b1
          << " mT; coarse scan over [" << lo << ", " << hi << "] mT gave edge minimum "
          << best_f << " MHz at index " << best << "; grid frequencies:";
      for (double f : fs) msg << ' ' << f;
      throw std::runtime_error(msg.str());
    }
    double a = lo + (hi - lo) * (best - 1) / (n - 1);
    double c = lo + (hi - lo) * (best + 1) / (n - 1);
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double tol_B = opt.golden_tol_MHz / slope;
    double x1 = c - gr * (c - a), x2 = a + gr * (c - a);
    double f1 = driven_lf_frequency(sys, x1, nu_uw_MHz, b1, f_cap, opt);
    double f2 = driven_lf_frequency(sys, x2, nu_uw_MHz, b1, f_cap, opt);
    while (c - a > tol_B) {
      if (f1 < f2) {
        c = x2; x2 = x1; f2 = f1;
        x1 = c - gr * (c - a);
        f1 = driven_lf_frequency(sys, x1, nu_uw_MHz, b1, f_cap, opt);
      } else {
        a = x1; x1 = x2; f1 = f2;
        x2 = a + gr * (c - a);
        f2 = driven_lf_frequency(sys, x2, nu_uw_MHz, b1, f_cap, opt);
      }
    }
    ShiftPoint sp;
    sp.b1_mT = b1;
    sp.b0_min_mT = 0.5 * (a + c);
    sp.nu_rabi_MHz = f1 < f2 ? f1 : f2;
    sp.shift_MHz = nu14(sp.b0_min_mT) - nu_uw_MHz;

    // Closed-form estimate: the crossing-angle denominator vanishes at the
    // drive-shifted resonance. Quoting the root relative to its zero-drive
    // limit cancels the static offset of the truncated frame model.
    double nu1 = sys.gamma_e() * b1 / 2.0;
    double b_root = den_root(nu1);
    sp.shift_analytic_MHz =
        (std::isnan(b_root) || std::isnan(b_ref_analytic))
            ? std::numeric_limits<double>::quiet_NaN()
            : slope * (b_root - b_ref_analytic);
    out.push_back(sp);
  }
  return out;
}

AnalyticTrace analytic_tf_trace(const SpinSystem& sys, double b0_mT, double nu_uw_MHz,
                                double nu1_MHz, const std::vector<double>& t_grid_ns) {
  TiltedSolution ts = solve_tilted(sys, b0_mT, nu_uw_MHz, nu1_MHz);
  AnalyticTrace out;
  out.truncation_valid =
      std::abs(nu1_MHz * std::sin(ts.ang.eta)) <= std::abs(ts.sf.omega_plus) / 10.0;

  auto expu = [](const Mat4& gen) {  // exp(-i * gen) for Hermitian gen
    Eigen::SelfAdjointEigenSolver<Mat4> es(gen);
    Vec4 ph;
    for (int i = 0; i < 4; ++i) ph(i) = std::exp(cplx(0.0, -es.eigenvalues()(i)));
    return Mat4(es.eigenvectors() * ph.asDiagonal() * es.eigenvectors().adjoint());
  };
  Mat4 u1 = expu(-(ts.ang.xi * ops::Iy() + ts.ang.eta * 2.0 * ops::Sz() * ops::Iy()));
  Mat4 u2 = expu((ts.ang.theta13 + ts.ang.theta24) / 2.0 * ops::Sy() +
                 (ts.ang.theta13 - ts.ang.theta24) * ops::Sy() * ops::Iz());

  // Doubly-tilted model Hamiltonian: diagonal part plus the residual
  // zero-/double-quantum pair couplings the last diagonalization removes.
  Mat4 h2 = ts.omega_s_dt * ops::Sz() + ts.sf.omega_plus / 2.0 * ops::Iz() +
            ts.omega_minus_dt * ops::Sz() * ops::Iz();
  h2(0, 3) = h2(3, 0) = cplx(ts.v_MHz, 0.0);
  h2(1, 2) = h2(2, 1) = cplx(-ts.v_MHz, 0.0);
  Eigen::SelfAdjointEigenSolver<Mat4> es(h2);
  Mat4 u = es.eigenvectors().adjoint() * u2 * u1;
  Eigen::Vector4d diag = es.eigenvalues();

  Mat4 sigma0 = u * ops::Ix() * u.adjoint();
  out.trace.times_ns = t_grid_ns;
  out.trace.values.resize(t_grid_ns.size());
  for (std::size_t i = 0; i < t_grid_ns.size(); ++i) {
    double t = t_grid_ns[i];
    Mat4 st = sigma0;
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 4; ++c)
        st(r, c) *= std::exp(cplx(0.0, -kTwoPiMHzns * (diag(r) - diag(c)) * t));
    // rho(t) = 1/4 + sigma(t)/2, so the polarization 2<Ix> = tr(sigma Ix).
    out.trace.values[i] = expectation(u.adjoint() * st * u, ops::Ix());
  }
  out.trace.validate();
  return out;
}

}  // namespace musim
