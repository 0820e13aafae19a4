#pragma once

#include <array>
#include <vector>

#include "musim/spin_system.hpp"

namespace musim {

// Eigenstructure of a 4x4 Hamiltonian at one field. Level labels 1..4 follow
// the adiabatic-connection convention: maximal overlap with the product kets
// |++>, |+->, |-+>, |--> (index 0..3 stores level 1..4).
struct LevelDiagram {
  double field_mT = 0.0;
  Eigen::Vector4d energies_MHz;   // ordered by level label
  Mat4 eigenvectors;              // columns, same order, orthonormal
};

struct Transition {
  int i = 0, j = 0;               // level labels, 1-based, i < j
  double nu_MHz = 0.0;            // |E_i - E_j|
  double gamma_MHz_per_mT = 0.0;  // transition moment: nu_Rabi = gamma * B1
};

struct TransitionTable {
  std::array<Transition, 6> pairs;  // (1,2),(1,3),(1,4),(2,3),(2,4),(3,4)
  const Transition& get(int i, int j) const;
};

// Diagonalizes H (must be Hermitian within 1e-10 relative) and labels levels.
// Degenerate subspaces are made deterministic by secondary diagonalization of
// Iz inside the subspace.
LevelDiagram diagonalize(const Mat4& h);

// Like diagonalize(), but labels by eigenvector overlap with a previous
// diagram (>0.5 required), for continuous tracking through sweeps.
LevelDiagram diagonalize_tracking(const Mat4& h, const LevelDiagram& prev);

LevelDiagram level_diagram(const SpinSystem& sys, double b0_mT);

TransitionTable transition_table(const SpinSystem& sys, double b0_mT);

struct BreitRabiSweep {
  std::vector<LevelDiagram> diagrams;
  std::vector<TransitionTable> tables;
};

BreitRabiSweep breit_rabi_sweep(const SpinSystem& sys, const std::vector<double>& b0_list_mT);

// Field at which transition (i,j) is resonant with nu_uw, found by bisection
// in [b_lo, b_hi]; throws if not bracketed.
double resonance_field(const SpinSystem& sys, int i, int j, double nu_uw_MHz,
                       double b_lo_mT, double b_hi_mT);

}  // namespace musim
