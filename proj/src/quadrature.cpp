#include "musim/quadrature.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

#include "musim/constants.hpp"

namespace musim {

Quadrature gauss_hermite(int n, double sigma) {
  if (n < 1) throw std::invalid_argument("gauss_hermite: n must be >= 1");
  Quadrature q;
  if (n == 1) {
    q.nodes = {0.0};
    q.weights = {1.0};
    return q;
  }
  // Golub-Welsch on the Hermite Jacobi matrix.
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    double b = std::sqrt(k / 2.0);
    jac(k, k - 1) = b;
    jac(k - 1, k) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jac);
  double wsum = 0.0;
  q.nodes.resize(n);
  q.weights.resize(n);
  for (int k = 0; k < n; ++k) {
    q.nodes[k] = es.eigenvalues()(k) * sigma * std::sqrt(2.0);
    q.weights[k] = es.eigenvectors()(0, k) * es.eigenvectors()(0, k);
    wsum += q.weights[k];
  }
  for (auto& w : q.weights) w /= wsum;
  return q;
}

Quadrature b1_quadrature(B1Distribution kind, double b1_mean, double rel_fwhm, int n) {
  if (n < 1) throw std::invalid_argument("b1_quadrature: n must be >= 1");
  if (rel_fwhm < 0.0) throw std::invalid_argument("b1_quadrature: negative width");
  Quadrature q;
  if (kind == B1Distribution::Gaussian) {
    double sigma = b1_mean * rel_fwhm / kFwhmPerSigma;
    q = gauss_hermite(n, sigma);
    for (auto& x : q.nodes) x += b1_mean;
  } else {
    // Standing-wave amplitude cos(pi y / L) sampled over a Gaussian beam of
    // FWHM rel_fwhm (fraction of the strip length), centered on the strip.
    double sigma_y = rel_fwhm / kFwhmPerSigma;
    Quadrature beam = gauss_hermite(n, sigma_y);
    double norm = 0.0;
    q.nodes.resize(n);
    q.weights = beam.weights;
    for (int k = 0; k < n; ++k) {
      q.nodes[k] = std::cos(kPi * beam.nodes[k]);
      norm += q.weights[k] * q.nodes[k];
    }
    for (auto& x : q.nodes) x *= b1_mean / norm;
  }
  return q;
}

}  // namespace musim
