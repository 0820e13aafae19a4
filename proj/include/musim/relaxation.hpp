#pragma once

#include "musim/levels.hpp"

namespace musim {

using Mat16 = Eigen::Matrix<cplx, 16, 16>;
using Vec16 = Eigen::Matrix<cplx, 16, 1>;

// Phenomenological per-transition dephasing, defined in the static-Hamiltonian
// eigenbasis: d rho_ij / dt = -rate_ij rho_ij for i != j. Optional uniform T1
// drives populations toward the maximally mixed state.
struct RelaxationModel {
  double rate_us[4][4] = {};  // symmetric, 1/us, diagonal ignored
  double rate_T1_us = 0.0;

  void set_pair(int level_i, int level_j, double rate_per_us);  // 1-based labels
  double pair(int level_i, int level_j) const;
  bool empty() const;
  void validate() const;
};

// Column-major vec convention: vec(rho)(i + 4j) = rho(i,j), so
// vec(A rho B) = (B^T kron A) vec(rho).
Mat16 kron_conj(const Mat4& left, const Mat4& right);  // (right^T kron left)

// Damping generator in the product basis (units 1/ns), acting on vec(rho).
Mat16 relaxation_generator(const RelaxationModel& relax, const LevelDiagram& diagram);

// Coherent Liouvillian -i*2pi*1e-3*(H vec - vec H) for H in MHz, units 1/ns.
Mat16 coherent_liouvillian(const Mat4& h_MHz);

}  // namespace musim
