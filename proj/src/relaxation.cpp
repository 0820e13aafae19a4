#include "musim/relaxation.hpp"

#include <cmath>
#include <stdexcept>

namespace musim {

void RelaxationModel::set_pair(int level_i, int level_j, double rate_per_us) {
  if (level_i < 1 || level_i > 4 || level_j < 1 || level_j > 4 || level_i == level_j)
    throw std::invalid_argument("relaxation: bad level pair");
  rate_us[level_i - 1][level_j - 1] = rate_per_us;
  rate_us[level_j - 1][level_i - 1] = rate_per_us;
}

double RelaxationModel::pair(int level_i, int level_j) const {
  return rate_us[level_i - 1][level_j - 1];
}

bool RelaxationModel::empty() const {
  if (rate_T1_us != 0.0) return false;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      if (rate_us[i][j] != 0.0) return false;
  return true;
}

void RelaxationModel::validate() const {
  if (!(rate_T1_us >= 0.0) || !std::isfinite(rate_T1_us))
    throw std::invalid_argument("relaxation: T1 rate must be finite and >= 0");
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      if (!(rate_us[i][j] >= 0.0) || !std::isfinite(rate_us[i][j]))
        throw std::invalid_argument("relaxation: rates must be finite and >= 0");
}

Mat16 kron_conj(const Mat4& left, const Mat4& right) {
  // (right^T kron left): vec(left * rho * right) for column-major vec.
  Mat16 out;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      out.block<4, 4>(4 * i, 4 * j) = right(j, i) * left;
  return out;
}

Mat16 coherent_liouvillian(const Mat4& h_MHz) {
  const cplx minus_i_two_pi(0.0, -kTwoPiMHzns);
  Mat16 left = kron_conj(h_MHz, Mat4::Identity());
  Mat16 right = kron_conj(Mat4::Identity(), h_MHz);
  return minus_i_two_pi * (left - right);
}

Mat16 relaxation_generator(const RelaxationModel& relax, const LevelDiagram& diagram) {
  relax.validate();
  // Diagonal damping in the eigenbasis Liouville space, then conjugated back
  // to the product basis: vec(rho_eig) = (V^T kron V^dagger) vec(rho).
  Mat16 d_eig = Mat16::Zero();
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      if (i != j) d_eig(i + 4 * j, i + 4 * j) = -relax.rate_us[i][j] * 1e-3;  // 1/us -> 1/ns

  if (relax.rate_T1_us != 0.0) {
    // Populations decay toward the maximally mixed state: dp_i/dt =
    // -g1 (p_i - tr(rho)/4).
    double g1 = relax.rate_T1_us * 1e-3;
    for (int i = 0; i < 4; ++i) {
      d_eig(i + 4 * i, i + 4 * i) += -g1;
      for (int j = 0; j < 4; ++j) d_eig(i + 4 * i, j + 4 * j) += g1 / 4.0;
    }
  }

  const Mat4& v = diagram.eigenvectors;
  Mat16 to_eig = kron_conj(Mat4(v.adjoint()), v);  // rho -> V^dag rho V
  Mat16 to_prod = kron_conj(v, Mat4(v.adjoint()));
  return to_prod * d_eig * to_eig;
}

}  // namespace musim
