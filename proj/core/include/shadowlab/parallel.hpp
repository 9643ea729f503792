#pragma once

#include <cstddef>
#include <functional>

namespace shadowlab {

/// Worker count: SHADOWLAB_THREADS if set and positive, else the hardware
/// concurrency (at least 1).
std::size_t worker_count();

/// Runs body(i) for i in [0, n) on up to worker_count() threads. Calls made
/// from inside a body run sequentially. Exceptions from any body are
/// rethrown (the one with the smallest index wins).
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace shadowlab
