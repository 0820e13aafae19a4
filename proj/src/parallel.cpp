#include "musim/parallel.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace musim::par {

int default_workers() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void serial_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  for (std::size_t i = 0; i < n; ++i) fn(i);
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn, int workers) {
#ifdef _OPENMP
  if (workers <= 0) workers = default_workers();
  if (workers > 1 && n > 1) {
#pragma omp parallel for schedule(dynamic) num_threads(workers)
    for (long long i = 0; i < (long long)n; ++i) fn((std::size_t)i);
    return;
  }
#endif
  serial_for(n, fn);
}

}  // namespace musim::par
