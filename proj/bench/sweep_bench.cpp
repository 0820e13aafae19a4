// Timing comparison of the OpenMP sweep path against the serial reference,
// plus a result-equality check on a small Rabi map.
#include <chrono>
#include <cmath>
#include <cstdio>

#include "musim/maps.hpp"
#include "musim/parallel.hpp"

using namespace musim;

int main() {
  SpinSystem sys = SpinSystem::isotropic(4500.0);
  std::vector<double> b0, b1;
  for (int k = 0; k < 12; ++k) b0.push_back(81.5 + 0.18 * k);
  for (int k = 0; k < 4; ++k) b1.push_back(0.3 + 0.2 * k);

  RabiMapOptions opt;
  opt.pulse_ns = 1500.0;
  opt.t_end_ns = 1500.0;

  auto time_map = [&](bool serial) {
    opt.serial = serial;
    auto t0 = std::chrono::steady_clock::now();
    RabiMap m = rabi_map(sys, b0, b1, opt);
    auto t1 = std::chrono::steady_clock::now();
    double ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
    return std::pair<RabiMap, double>{m, ms};
  };

  auto [serial_map, serial_ms] = time_map(true);
  auto [parallel_map, parallel_ms] = time_map(false);

  double max_diff = 0.0;
  for (std::size_t k = 0; k < serial_map.nu_eff_MHz.size(); ++k)
    max_diff = std::max(max_diff,
                        std::abs(serial_map.nu_eff_MHz[k] - parallel_map.nu_eff_MHz[k]));

  std::printf("grid: %zu x %zu cells, trace %.0f ns\n", b0.size(), b1.size(), opt.pulse_ns);
  std::printf("serial reference: %8.1f ms\n", serial_ms);
  std::printf("parallel (%d workers): %8.1f ms  (speedup %.2fx)\n", par::default_workers(),
              parallel_ms, serial_ms / parallel_ms);
  std::printf("max |serial - parallel| nu_eff: %g MHz\n", max_diff);
  return max_diff == 0.0 ? 0 : 1;
}
