#include "musim/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <stdexcept>

#include <fftw3.h>

#include "musim/constants.hpp"

namespace musim {

namespace {
// FFTW planning is not thread-safe; execution of independent plans is.
std::mutex& plan_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

Spectrum fft_spectrum(const AsymmetryTrace& trace, Window window, int pad_factor) {
  trace.validate();
  if (trace.size() < 4) throw std::invalid_argument("fft_spectrum: trace too short");
  if (pad_factor < 1) throw std::invalid_argument("fft_spectrum: pad_factor must be >= 1");
  double dt = trace.uniform_dt();

  std::size_t n = trace.size();
  std::size_t n_pad = n * std::size_t(pad_factor);

  double mean = 0.0;
  for (double v : trace.values) mean += v;
  mean /= double(n);

  std::vector<double> in(n_pad, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    double w = 1.0;
    if (window == Window::Hann)
      w = 0.5 * (1.0 - std::cos(2.0 * kPi * double(k) / double(n - 1)));
    in[k] = (trace.values[k] - mean) * w;
  }

  std::size_t n_out = n_pad / 2 + 1;
  std::vector<fftw_complex> out(n_out);
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(plan_mutex());
    plan = fftw_plan_dft_r2c_1d(int(n_pad), in.data(), out.data(), FFTW_ESTIMATE);
  }
  if (!plan) throw std::runtime_error("fft_spectrum: FFTW plan creation failed");
  fftw_execute(plan);
  {
    std::lock_guard<std::mutex> lock(plan_mutex());
    fftw_destroy_plan(plan);
  }

  Spectrum s;
  s.window = window;
  s.pad_factor = pad_factor;
  s.detrended = true;
  s.freqs_MHz.resize(n_out);
  s.magnitude.resize(n_out);
  // dt in ns, frequencies in MHz: df = 1e3 / (n_pad * dt).
  double df = 1e3 / (double(n_pad) * dt);
  for (std::size_t k = 0; k < n_out; ++k) {
    s.freqs_MHz[k] = df * double(k);
    s.magnitude[k] = std::hypot(out[k][0], out[k][1]) * 2.0 / double(n);
  }
  return s;
}

namespace {
Peak refine(const Spectrum& s, std::size_t k) {
  Peak p;
  p.found = true;
  p.freq_MHz = s.freqs_MHz[k];
  p.amplitude = s.magnitude[k];
  if (k > 0 && k + 1 < s.magnitude.size()) {
    double ym = s.magnitude[k - 1], y0 = s.magnitude[k], yp = s.magnitude[k + 1];
    double denom = ym - 2.0 * y0 + yp;
    if (std::abs(denom) > 1e-300) {
      double d = 0.5 * (ym - yp) / denom;
      if (std::abs(d) <= 1.0) {
        p.freq_MHz += d * s.bin_MHz();
        p.amplitude = y0 - 0.25 * (ym - yp) * d;
      }
    }
  }
  return p;
}
}  // namespace

Peak find_peak(const Spectrum& s, double f_lo_MHz, double f_hi_MHz) {
  std::size_t best_k = 0;
  bool found = false;
  for (std::size_t k = 1; k + 1 < s.magnitude.size(); ++k) {
    if (s.freqs_MHz[k] < f_lo_MHz || s.freqs_MHz[k] > f_hi_MHz) continue;
    if (s.magnitude[k] >= s.magnitude[k - 1] && s.magnitude[k] >= s.magnitude[k + 1] &&
        (!found || s.magnitude[k] > s.magnitude[best_k])) {
      best_k = k;
      found = true;
    }
  }
  return found ? refine(s, best_k) : Peak{};
}

std::vector<Peak> find_peaks(const Spectrum& s, double f_lo_MHz, double f_hi_MHz,
                             double threshold) {
  std::vector<Peak> peaks;
  double top = 0.0;
  for (std::size_t k = 0; k < s.magnitude.size(); ++k)
    if (s.freqs_MHz[k] >= f_lo_MHz && s.freqs_MHz[k] <= f_hi_MHz)
      top = std::max(top, s.magnitude[k]);
  for (std::size_t k = 1; k + 1 < s.magnitude.size(); ++k) {
    if (s.freqs_MHz[k] < f_lo_MHz || s.freqs_MHz[k] > f_hi_MHz) continue;
    if (s.magnitude[k] > s.magnitude[k - 1] && s.magnitude[k] >= s.magnitude[k + 1] &&
        s.magnitude[k] >= threshold * top)
      peaks.push_back(refine(s, k));
  }
  std::sort(peaks.begin(), peaks.end(),
            [](const Peak& a, const Peak& b) { return a.amplitude > b.amplitude; });
  return peaks;
}

}  // namespace musim
