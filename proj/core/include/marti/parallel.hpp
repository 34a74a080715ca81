#pragma once

#include <cstddef>
#include <functional>

namespace marti {

/// Worker count: hardware concurrency, capped by MARTI_DRO_THREADS when set.
std::size_t worker_count();

/// Calls body(i) for i in [0, n) on up to worker_count() threads in contiguous
/// chunks. body must only write state owned by index i, which keeps results
/// independent of the worker count. The first exception thrown is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace marti
