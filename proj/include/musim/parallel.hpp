#pragma once

#include <cstddef>
#include <functional>

namespace musim::par {

// Data-parallel loop over independent grid points. The OpenMP path and the
// serial reference must produce identical results; fn(i) may only write to
// slot i of preallocated output.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn, int workers = 0);

// Serial reference implementation, kept for testing and benchmarking.
void serial_for(std::size_t n, const std::function<void(std::size_t)>& fn);

int default_workers();

}  // namespace musim::par
