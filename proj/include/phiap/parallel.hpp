#pragma once

#include <cstddef>
#include <functional>

namespace phiap {

/// Worker count: PHIAP_THREADS if set, else hardware concurrency (min 1).
std::size_t default_thread_count();

/// Runs fn(0..n-1) on a pool of worker threads. Tasks must write only to
/// their own slot of any shared output; the first exception thrown by a task
/// is rethrown after all workers stop.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn, std::size_t threads = 0);

}  // namespace phiap
