#pragma once

#include <Eigen/Dense>
#include <complex>

namespace musim {

using Mat4 = Eigen::Matrix4cd;
using Vec4 = Eigen::Vector4cd;
using cplx = std::complex<double>;

// Product operators on the |m_S, m_I> basis, ordered
// |+1/2,+1/2>, |+1/2,-1/2>, |-1/2,+1/2>, |-1/2,-1/2>.
namespace ops {

inline Mat4 kron2(const Eigen::Matrix2cd& a, const Eigen::Matrix2cd& b) {
  Mat4 m;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      m.block<2, 2>(2 * i, 2 * j) = a(i, j) * b;
  return m;
}

inline const Eigen::Matrix2cd& pauli_half(int axis) {
  static const Eigen::Matrix2cd x = (Eigen::Matrix2cd() << 0, 0.5, 0.5, 0).finished();
  static const Eigen::Matrix2cd y =
      (Eigen::Matrix2cd() << 0, cplx(0, -0.5), cplx(0, 0.5), 0).finished();
  static const Eigen::Matrix2cd z = (Eigen::Matrix2cd() << 0.5, 0, 0, -0.5).finished();
  static const Eigen::Matrix2cd* m[3] = {&x, &y, &z};
  return *m[axis];
}

inline const Mat4& Sx() { static const Mat4 m = kron2(pauli_half(0), Eigen::Matrix2cd::Identity()); return m; }
inline const Mat4& Sy() { static const Mat4 m = kron2(pauli_half(1), Eigen::Matrix2cd::Identity()); return m; }
inline const Mat4& Sz() { static const Mat4 m = kron2(pauli_half(2), Eigen::Matrix2cd::Identity()); return m; }
inline const Mat4& Ix() { static const Mat4 m = kron2(Eigen::Matrix2cd::Identity(), pauli_half(0)); return m; }
inline const Mat4& Iy() { static const Mat4 m = kron2(Eigen::Matrix2cd::Identity(), pauli_half(1)); return m; }
inline const Mat4& Iz() { static const Mat4 m = kron2(Eigen::Matrix2cd::Identity(), pauli_half(2)); return m; }

// S.I scalar coupling.
inline const Mat4& SdotI() {
  static const Mat4 m = Sx() * Ix() + Sy() * Iy() + Sz() * Iz();
  return m;
}

}  // namespace ops

inline double expectation(const Mat4& rho, const Mat4& op) {
  return (rho * op).trace().real();
}

inline double hermiticity_residual(const Mat4& m) {
  double n = m.norm();
  if (n == 0.0) return 0.0;
  return (m - m.adjoint()).norm() / n;
}

}  // namespace musim
