#include "musim/propagate.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "musim/constants.hpp"
#include "musim/quadrature.hpp"

namespace musim {

namespace {

// Piecewise-constant timeline: segments, inter-segment gaps, and (optionally)
// short constant-amplitude slices approximating the pulse edge ramps.
struct Piece {
  double t0 = 0.0, t1 = 0.0;
  bool driven = false;
  double b1 = 0.0;       // scaled amplitude, mT
  double phase = 0.0;    // rad
  double freq = 0.0;     // MHz
};

constexpr int kRampSlices = 4;

std::vector<Piece> build_timeline(const PulseSequence& seq, const PropagateOptions& opt) {
  std::vector<Piece> pieces;
  double cursor = 0.0;
  auto push_gap = [&](double upto) {
    if (upto > cursor + 1e-12) pieces.push_back({cursor, upto, false, 0, 0, 0});
    cursor = std::max(cursor, upto);
  };
  for (const auto& s : seq.segments) {
    double a = s.t_start_ns, b = std::min(s.t_start_ns + s.duration_ns, seq.t_end_ns);
    if (a >= seq.t_end_ns) break;
    push_gap(a);
    double amp = s.b1_mT * opt.b1_scale;
    double r = opt.edge_ramp_ns;
    if (r > 0.0 && 2.0 * r < b - a) {
      for (int k = 0; k < kRampSlices; ++k) {
        double f = (k + 0.5) / kRampSlices;
        pieces.push_back({a + k * r / kRampSlices, a + (k + 1) * r / kRampSlices,
                          true, amp * f, s.phase_rad, s.freq_MHz});
      }
      pieces.push_back({a + r, b - r, true, amp, s.phase_rad, s.freq_MHz});
      for (int k = 0; k < kRampSlices; ++k) {
        double f = 1.0 - (k + 0.5) / kRampSlices;
        pieces.push_back({b - r + k * r / kRampSlices, b - r + (k + 1) * r / kRampSlices,
                          true, amp * f, s.phase_rad, s.freq_MHz});
      }
    } else {
      pieces.push_back({a, b, true, amp, s.phase_rad, s.freq_MHz});
    }
    cursor = b;
  }
  push_gap(seq.t_end_ns);
  return pieces;
}

// Uniform dephasing/T1 applier in the static eigenbasis; used on the lab-frame
// path where relaxation is Trotter-split from the coherent steps.
struct DampingApplier {
  bool active = false;
  Mat4 vecs;                      // static eigenvectors (columns)
  double rate_ns[4][4] = {};      // 1/ns
  double t1_ns = 0.0;

  DampingApplier() = default;
  DampingApplier(const RelaxationModel& relax, const LevelDiagram& diagram) {
    active = !relax.empty();
    vecs = diagram.eigenvectors;
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) rate_ns[i][j] = relax.rate_us[i][j] * 1e-3;
    t1_ns = relax.rate_T1_us * 1e-3;
  }

  void apply(Mat4& rho, double dt) const {
    if (!active) return;
    Mat4 r = vecs.adjoint() * rho * vecs;
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j)
        if (i != j) r(i, j) *= std::exp(-rate_ns[i][j] * dt);
    if (t1_ns > 0.0) {
      cplx mean = r.trace() / 4.0;
      double f = std::exp(-t1_ns * dt);
      for (int i = 0; i < 4; ++i) r(i, i) = mean + (r(i, i) - mean) * f;
    }
    rho = vecs * r * vecs.adjoint();
  }
};

double drive_frequency(const PulseSequence& seq) {
  double f = 0.0;
  bool set = false;
  for (const auto& s : seq.segments) {
    if (!set) { f = s.freq_MHz; set = true; }
    else if (std::abs(s.freq_MHz - f) > 1e-9 * std::max(1.0, std::abs(f)))
      throw std::invalid_argument(
          "propagate: rotating frame requires a single drive frequency; "
          "use the lab frame for multi-frequency sequences");
  }
  return f;
}

std::vector<double> sample_times(const PulseSequence& seq, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("propagate: dt_ns must be positive");
  std::size_t n = std::size_t(std::floor(seq.t_end_ns / dt + 1e-9)) + 1;
  std::vector<double> ts(n);
  for (std::size_t k = 0; k < n; ++k) ts[k] = k * dt;
  return ts;
}

struct Observer {
  Geometry geom;
  bool backrotate = false;  // muon was co-rotated by the frame transform
  double nu_uw = 0.0;
  int sense = 1;            // sign of the frame rotation exp(i*sense*wt*N)

  double measure(const Mat4& rho, double t) const {
    if (geom == Geometry::LF) return 2.0 * expectation(rho, ops::Iz());
    double mx = 2.0 * expectation(rho, ops::Ix());
    if (!backrotate) return mx;
    double my = 2.0 * expectation(rho, ops::Iy());
    double th = kTwoPiMHzns * nu_uw * t;
    return std::cos(th) * mx - sense * std::sin(th) * my;
  }
};

Mat4 rotating_piece_hamiltonian(const Mat4& h_static, const SpinSystem& sys,
                                const Piece& p, double nu_uw, bool total_frame,
                                int sense) {
  Mat4 nop = total_frame ? Mat4(ops::Sz() + ops::Iz()) : Mat4(ops::Sz());
  Mat4 h = h_static - (sense * nu_uw) * nop;
  if (p.driven && p.b1 != 0.0) {
    double c = std::cos(p.phase), s = sense * std::sin(p.phase);
    h += (p.b1 / 2.0) * (-sys.gamma_e()) * (c * ops::Sx() + s * ops::Sy());
    if (total_frame)
      h += (p.b1 / 2.0) * sys.gamma_mu * (c * ops::Ix() + s * ops::Iy());
  }
  return h;
}

// A linear drive carries both circular components; the rotating-wave frame
// must co-rotate with the one that is near-resonant. Levels connected by the
// drive can have total-spin projection differing by +1 or -1 relative to the
// energy ordering, so pick the rotation sense that leaves the smallest
// residual splitting among drive-allowed pairs.
int frame_sense(const SpinSystem& sys, const LevelDiagram& diagram, double nu_uw,
                bool total_frame) {
  if (nu_uw == 0.0) return 1;
  Mat4 nop = total_frame ? Mat4(ops::Sz() + ops::Iz()) : Mat4(ops::Sz());
  const Mat4& v = diagram.eigenvectors;
  Mat4 d = v.adjoint() * drive_operator(sys) * v;
  Eigen::Vector4d n;
  for (int i = 0; i < 4; ++i) n(i) = (v.col(i).adjoint() * nop * v.col(i))(0).real();
  double dmax = d.cwiseAbs().maxCoeff();
  double best_plus = std::numeric_limits<double>::infinity(), best_minus = best_plus;
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j) {
      if (std::abs(d(i, j)) < 1e-6 * dmax) continue;
      double de = diagram.energies_MHz(i) - diagram.energies_MHz(j);
      double dn = n(i) - n(j);
      if (std::abs(dn) < 1e-6) continue;  // frame-invariant pair
      best_plus = std::min(best_plus, std::abs(de - nu_uw * dn));
      best_minus = std::min(best_minus, std::abs(de + nu_uw * dn));
    }
  return best_minus < best_plus ? -1 : 1;
}

void propagate_rotating(Mat4& rho, const SpinSystem& sys, const Mat4& h_static,
                        const std::vector<Piece>& pieces, const std::vector<double>& ts,
                        const RelaxationModel& relax, const LevelDiagram& diagram,
                        double nu_uw, bool total_frame, const Observer& obs,
                        std::vector<double>& out) {
  const bool damped = !relax.empty();
  Mat16 rgen;
  if (damped) rgen = relaxation_generator(relax, diagram);
  std::size_t k = 0;
  if (!ts.empty() && ts[0] <= 1e-12) out[k++] = obs.measure(rho, 0.0);
  for (const auto& p : pieces) {
    Mat4 h = rotating_piece_hamiltonian(h_static, sys, p, nu_uw, total_frame, obs.sense);
    if (!damped) {
      Eigen::SelfAdjointEigenSolver<Mat4> es(h);
      if (es.info() != Eigen::Success)
        throw std::runtime_error("propagate: eigensolver failed");
      const Mat4& q = es.eigenvectors();
      Eigen::Vector4d ev = es.eigenvalues();
      Mat4 r0 = q.adjoint() * rho * q;
      auto at = [&](double tau) {
        Mat4 r = r0;
        for (int i = 0; i < 4; ++i)
          for (int j = 0; j < 4; ++j)
            r(i, j) *= std::exp(cplx(0.0, -kTwoPiMHzns * (ev(i) - ev(j)) * tau));
        return Mat4(q * r * q.adjoint());
      };
      for (; k < ts.size() && ts[k] <= p.t1 + 1e-9; ++k)
        out[k] = obs.measure(at(ts[k] - p.t0), ts[k]);
      rho = at(p.t1 - p.t0);
    } else {
      Mat16 lv = coherent_liouvillian(h) + rgen;
      Eigen::ComplexEigenSolver<Mat16> es(lv);
      if (es.info() != Eigen::Success)
        throw std::runtime_error("propagate: Liouvillian eigensolver failed");
      Vec16 v0 = Eigen::Map<const Vec16>(rho.data());
      Vec16 c = es.eigenvectors().fullPivLu().solve(v0);
      auto at = [&](double tau) {
        Vec16 amp = c;
        for (int i = 0; i < 16; ++i) amp(i) *= std::exp(es.eigenvalues()(i) * tau);
        Vec16 v = es.eigenvectors() * amp;
        Mat4 r = Eigen::Map<const Mat4>(v.data());
        return Mat4(0.5 * (r + r.adjoint()));
      };
      for (; k < ts.size() && ts[k] <= p.t1 + 1e-9; ++k)
        out[k] = obs.measure(at(ts[k] - p.t0), ts[k]);
      rho = at(p.t1 - p.t0);
    }
  }
}

void propagate_lab(Mat4& rho, const SpinSystem& sys, const Mat4& h_static,
                   const std::vector<Piece>& pieces, const std::vector<double>& ts,
                   const DampingApplier& damp, const PropagateOptions& opt,
                   const Observer& obs, std::vector<double>& out) {
  for (const auto& p : pieces)
    if (p.driven && p.freq > 0.0 && opt.lab_dt_ns > 50.0 / p.freq)
      throw std::invalid_argument(
          "propagate: lab-frame dt too coarse for the drive period "
          "(need lab_dt_ns <= 1/(20 nu_uw))");

  Eigen::SelfAdjointEigenSolver<Mat4> es0(h_static);
  const Mat4 q0 = es0.eigenvectors();
  const Eigen::Vector4d e0 = es0.eigenvalues();
  Eigen::SelfAdjointEigenSolver<Mat4> esx(drive_operator(sys));
  const Mat4 qx = esx.eigenvectors();
  const Eigen::Vector4d ex = esx.eigenvalues();

  auto static_u = [&](double tau) {
    Vec4 ph;
    for (int i = 0; i < 4; ++i) ph(i) = std::exp(cplx(0.0, -kTwoPiMHzns * e0(i) * tau));
    return Mat4(q0 * ph.asDiagonal() * q0.adjoint());
  };

  auto evolve_free = [&](double a, double b) {
    if (b - a <= 1e-12) return;
    Mat4 u = static_u(b - a);
    rho = u * rho * u.adjoint();
    damp.apply(rho, b - a);
  };
  auto evolve_driven = [&](const Piece& p, double a, double b) {
    if (b - a <= 1e-12) return;
    int n = std::max(1, int(std::ceil((b - a) / opt.lab_dt_ns)));
    double h = (b - a) / n;
    Mat4 uh = static_u(h / 2.0);
    for (int s = 0; s < n; ++s) {
      double tm = a + (s + 0.5) * h;
      double amp = p.b1 * std::cos(kTwoPiMHzns * p.freq * tm + p.phase);
      Vec4 ph;
      for (int i = 0; i < 4; ++i)
        ph(i) = std::exp(cplx(0.0, -kTwoPiMHzns * amp * ex(i) * h));
      Mat4 u = uh * qx * ph.asDiagonal() * qx.adjoint() * uh;
      rho = u * rho * u.adjoint();
      damp.apply(rho, h);
    }
  };

  std::size_t k = 0;
  if (!ts.empty() && ts[0] <= 1e-12) out[k++] = obs.measure(rho, 0.0);
  for (const auto& p : pieces) {
    double t = p.t0;
    for (; k < ts.size() && ts[k] <= p.t1 + 1e-9; ++k) {
      if (p.driven) evolve_driven(p, t, ts[k]); else evolve_free(t, ts[k]);
      t = ts[k];
      out[k] = obs.measure(rho, t);
    }
    if (p.driven) evolve_driven(p, t, p.t1); else evolve_free(t, p.t1);
  }
}

}  // namespace

Mat4 initial_state(Geometry geometry) {
  Mat4 rho = Mat4::Identity() / 4.0;
  rho += (geometry == Geometry::LF) ? Mat4(0.5 * ops::Iz()) : Mat4(0.5 * ops::Ix());
  return rho;
}

PropagationResult propagate(const Mat4& rho0, const SpinSystem& sys, double b0_mT,
                            const PulseSequence& seq, const RelaxationModel& relax,
                            const PropagateOptions& opt) {
  sys.validate();
  seq.validate();
  relax.validate();
  if (std::abs(rho0.trace().real() - 1.0) > 1e-9 || hermiticity_residual(rho0) > 1e-9)
    throw std::invalid_argument("propagate: rho0 must be Hermitian with unit trace");

  Mat4 h_static = build_static_hamiltonian(sys, b0_mT);
  h_static += opt.electron_offset_MHz * ops::Sz();
  LevelDiagram diagram = diagonalize(h_static);
  std::vector<Piece> pieces = build_timeline(seq, opt);
  std::vector<double> ts = sample_times(seq, opt.dt_ns);
  std::vector<double> vals(ts.size(), 0.0);

  Mat4 rho = rho0;
  Observer obs{seq.geometry, false, 0.0};

  if (opt.frame == Frame::Rotating) {
    double nu_uw = drive_frequency(seq);
    bool total_frame = (sys.coupling == Coupling::Isotropic) && nu_uw != 0.0;
    obs.backrotate = total_frame;
    obs.nu_uw = nu_uw;
    obs.sense = frame_sense(sys, diagram, nu_uw, total_frame);
    propagate_rotating(rho, sys, h_static, pieces, ts, relax, diagram, nu_uw,
                       total_frame, obs, vals);
  } else {
    DampingApplier damp(relax, diagram);
    propagate_lab(rho, sys, h_static, pieces, ts, damp, opt, obs, vals);
  }

  PropagationResult res;
  res.trace.times_ns = std::move(ts);
  res.trace.values = std::move(vals);
  res.rho_final = rho;
  res.trace.validate();
  return res;
}

PropagationResult propagate(const SpinSystem& sys, double b0_mT, const PulseSequence& seq,
                            const RelaxationModel& relax, const PropagateOptions& opt) {
  return propagate(initial_state(seq.geometry), sys, b0_mT, seq, relax, opt);
}

AsymmetryTrace ensemble_average(const std::function<AsymmetryTrace(double)>& sim_at_offset,
                                double fwhm_MHz, int n_points) {
  if (n_points < 1 || n_points % 2 == 0)
    throw std::invalid_argument("ensemble_average: n_points must be odd and >= 1");
  if (fwhm_MHz < 0.0) throw std::invalid_argument("ensemble_average: negative FWHM");
  if (fwhm_MHz == 0.0 || n_points == 1) return sim_at_offset(0.0);
  Quadrature q = gauss_hermite(n_points, fwhm_MHz / kFwhmPerSigma);
  AsymmetryTrace acc;
  for (int k = 0; k < n_points; ++k) {
    AsymmetryTrace t = sim_at_offset(q.nodes[k]);
    if (k == 0) {
      acc = t;
      for (auto& v : acc.values) v *= q.weights[0];
    } else {
      if (t.size() != acc.size())
        throw std::runtime_error("ensemble_average: inconsistent trace lengths");
      for (std::size_t i = 0; i < t.size(); ++i) acc.values[i] += q.weights[k] * t.values[i];
    }
  }
  return acc;
}

}  // namespace musim
