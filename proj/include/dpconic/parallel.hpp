#pragma once

// Minimal worker pool for Monte Carlo loops. Work items are indexed, results
// are written to per-index slots, so the outcome never depends on the number
// of threads or on scheduling.

#include <cstddef>
#include <functional>

namespace dpconic {

/// Worker count: DP_CONIC_THREADS if set and positive, otherwise the
/// hardware concurrency (at least 1).
unsigned worker_count();

/// Calls body(i) for i in [0, count); a call from inside a pool worker runs
/// inline. The first exception thrown by any item (lowest index wins) is
/// rethrown after all workers stop.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace dpconic
