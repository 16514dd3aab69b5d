#pragma once

#include <cstddef>
#include <functional>

namespace destab {

// Worker count for parallel sweeps: hardware concurrency, capped by the
// DESTAB_THREADS environment variable when it holds a positive integer.
std::size_t worker_count();

// Calls body(i) for every i in [0, count). Iterations are split into
// contiguous blocks across worker_count() threads; body must be reentrant.
// The first exception thrown by any iteration is rethrown on the caller.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace destab
