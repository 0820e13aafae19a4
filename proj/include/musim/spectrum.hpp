#pragma once

#include <string>

#include "musim/trace.hpp"

namespace musim {

enum class Window { Rectangular, Hann };

struct Spectrum {
  std::vector<double> freqs_MHz;   // uniform ascending, from 0 to Nyquist
  std::vector<double> magnitude;   // >= 0
  Window window = Window::Rectangular;
  int pad_factor = 1;
  bool detrended = true;

  double bin_MHz() const { return freqs_MHz.size() > 1 ? freqs_MHz[1] - freqs_MHz[0] : 0.0; }
};

// Mean-removed, windowed, zero-padded magnitude spectrum of a uniform trace.
Spectrum fft_spectrum(const AsymmetryTrace& trace, Window window = Window::Hann,
                      int pad_factor = 8);

struct Peak {
  double freq_MHz = 0.0;
  double amplitude = 0.0;  // interpolated magnitude
  bool found = false;
};

// Largest local maximum in [f_lo, f_hi], refined by parabolic interpolation
// of the three bins around the maximum.
Peak find_peak(const Spectrum& s, double f_lo_MHz, double f_hi_MHz);

// All local maxima above threshold*max in [f_lo, f_hi], strongest first.
std::vector<Peak> find_peaks(const Spectrum& s, double f_lo_MHz, double f_hi_MHz,
                             double threshold = 0.1);

}  // namespace musim
