#include "musim/levels.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace musim {

namespace {

// Deterministic eigenvector phases: largest-magnitude component real positive.
void fix_phases(Mat4& v) {
  for (int c = 0; c < 4; ++c) {
    int imax = 0;
    double amax = 0.0;
    for (int r = 0; r < 4; ++r) {
      double a = std::abs(v(r, c));
      if (a > amax) { amax = a; imax = r; }
    }
    cplx z = v(imax, c);
    if (std::abs(z) > 0) v.col(c) *= std::conj(z) / std::abs(z);
  }
}

// Permutation of eigenvector columns maximizing summed overlap with the
// columns of `ref` (24 candidates, exact).
std::array<int, 4> best_assignment(const Mat4& vecs, const Mat4& ref) {
  std::array<int, 4> perm = {0, 1, 2, 3}, best = perm;
  double overlap[4][4];
  for (int label = 0; label < 4; ++label)
    for (int c = 0; c < 4; ++c)
      overlap[label][c] = std::norm(ref.col(label).dot(vecs.col(c)));
  double best_score = -1.0;
  std::sort(perm.begin(), perm.end());
  do {
    double s = 0.0;
    for (int label = 0; label < 4; ++label) s += overlap[label][perm[label]];
    if (s > best_score) { best_score = s; best = perm; }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

LevelDiagram diagonalize_with_reference(const Mat4& h, const Mat4& ref, double field_mT) {
  double hres = hermiticity_residual(h);
  if (hres > 1e-10)
    throw std::invalid_argument("diagonalize: input not Hermitian within tolerance");

  Eigen::SelfAdjointEigenSolver<Mat4> es(0.5 * (h + Mat4(h.adjoint())));
  Eigen::Vector4d evals = es.eigenvalues();
  Mat4 vecs = es.eigenvectors();

  // Disambiguate degenerate subspaces by diagonalizing Iz inside them.
  double scale = std::max(1.0, evals.cwiseAbs().maxCoeff());
  int k = 0;
  while (k < 4) {
    int m = k + 1;
    while (m < 4 && std::abs(evals(m) - evals(k)) < 1e-8 * scale) ++m;
    if (m - k > 1) {
      int d = m - k;
      Eigen::MatrixXcd sub = vecs.block(0, k, 4, d);
      Eigen::MatrixXcd iz_sub = sub.adjoint() * ops::Iz() * sub;
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> sub_es(iz_sub);
      vecs.block(0, k, 4, d) = sub * sub_es.eigenvectors();
    }
    k = m;
  }
  fix_phases(vecs);

  auto perm = best_assignment(vecs, ref);
  LevelDiagram d;
  d.field_mT = field_mT;
  for (int label = 0; label < 4; ++label) {
    d.energies_MHz(label) = evals(perm[label]);
    d.eigenvectors.col(label) = vecs.col(perm[label]);
  }
  return d;
}

}  // namespace

LevelDiagram diagonalize(const Mat4& h) {
  return diagonalize_with_reference(h, Mat4::Identity(), 0.0);
}

LevelDiagram diagonalize_tracking(const Mat4& h, const LevelDiagram& prev) {
  LevelDiagram d = diagonalize_with_reference(h, prev.eigenvectors, prev.field_mT);
  return d;
}

LevelDiagram level_diagram(const SpinSystem& sys, double b0_mT) {
  LevelDiagram d = diagonalize(build_static_hamiltonian(sys, b0_mT));
  d.field_mT = b0_mT;
  return d;
}

const Transition& TransitionTable::get(int i, int j) const {
  for (const auto& t : pairs)
    if ((t.i == i && t.j == j) || (t.i == j && t.j == i)) return t;
  throw std::invalid_argument("transition pair out of range");
}

TransitionTable transition_table(const SpinSystem& sys, double b0_mT) {
  LevelDiagram d = level_diagram(sys, b0_mT);
  Mat4 drv = drive_operator(sys);
  TransitionTable tab;
  int idx = 0;
  for (int i = 0; i < 4; ++i) {
    for (int j = i + 1; j < 4; ++j) {
      Transition t;
      t.i = i + 1;
      t.j = j + 1;
      t.nu_MHz = std::abs(d.energies_MHz(i) - d.energies_MHz(j));
      t.gamma_MHz_per_mT = std::abs(cplx(d.eigenvectors.col(i).adjoint() * drv * d.eigenvectors.col(j)));
      tab.pairs[idx++] = t;
    }
  }
  return tab;
}

BreitRabiSweep breit_rabi_sweep(const SpinSystem& sys, const std::vector<double>& b0_list_mT) {
  if (b0_list_mT.empty()) throw std::invalid_argument("breit_rabi_sweep: empty field list");
  BreitRabiSweep out;
  out.diagrams.reserve(b0_list_mT.size());
  out.tables.reserve(b0_list_mT.size());
  Mat4 drv = drive_operator(sys);
  for (std::size_t k = 0; k < b0_list_mT.size(); ++k) {
    double b0 = b0_list_mT[k];
    if (b0 < 0.0) throw std::invalid_argument("breit_rabi_sweep: negative field");
    Mat4 h = build_static_hamiltonian(sys, b0);
    LevelDiagram d = k == 0 ? diagonalize(h) : diagonalize_tracking(h, out.diagrams.back());
    d.field_mT = b0;
    TransitionTable tab;
    int idx = 0;
    for (int i = 0; i < 4; ++i)
      for (int j = i + 1; j < 4; ++j) {
        Transition t;
        t.i = i + 1;
        t.j = j + 1;
        t.nu_MHz = std::abs(d.energies_MHz(i) - d.energies_MHz(j));
        t.gamma_MHz_per_mT =
            std::abs(cplx(d.eigenvectors.col(i).adjoint() * drv * d.eigenvectors.col(j)));
        tab.pairs[idx++] = t;
      }
    out.diagrams.push_back(d);
    out.tables.push_back(tab);
  }
  return out;
}

double resonance_field(const SpinSystem& sys, int i, int j, double nu_uw_MHz, double b_lo_mT,
                       double b_hi_mT) {
  auto f = [&](double b) { return transition_table(sys, b).get(i, j).nu_MHz - nu_uw_MHz; };
  double flo = f(b_lo_mT), fhi = f(b_hi_mT);
  if (flo * fhi > 0.0) throw std::runtime_error("resonance_field: not bracketed");
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (b_lo_mT + b_hi_mT);
    double fm = f(mid);
    if (std::abs(fm) < 1e-9 || (b_hi_mT - b_lo_mT) < 1e-12) return mid;
    if (flo * fm <= 0.0) { b_hi_mT = mid; fhi = fm; }
    else { b_lo_mT = mid; flo = fm; }
  }
  return 0.5 * (b_lo_mT + b_hi_mT);
}

}  // namespace musim
