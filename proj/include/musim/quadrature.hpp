#pragma once

#include <vector>

namespace musim {

struct Quadrature {
  std::vector<double> nodes;
  std::vector<double> weights;  // normalized to sum 1
};

// Nodes/weights for averaging over a normal distribution with the given
// standard deviation (Gauss-Hermite abscissae scaled by sigma*sqrt(2)).
Quadrature gauss_hermite(int n, double sigma);

// Distribution of drive amplitudes. Gaussian: normal around b1_mean with the
// given relative FWHM. SinusoidalProfile: B1(y) = b1_mean-normalized standing
// wave sampled over a Gaussian beam of FWHM beam_fraction of the strip length.
enum class B1Distribution { Gaussian, SinusoidalProfile };

Quadrature b1_quadrature(B1Distribution kind, double b1_mean, double rel_fwhm, int n);

}  // namespace musim
