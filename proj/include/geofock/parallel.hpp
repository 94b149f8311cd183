#pragma once

#include <functional>

namespace geofock {

/// Worker count from GEOFOCK_THREADS (default: hardware concurrency, at least 1).
int thread_count();

/// Runs f(0) ... f(count - 1) on up to thread_count() threads. Each task writes
/// only its own slot, so results do not depend on scheduling. The first
/// exception thrown by a task is rethrown after all workers finish.
void parallel_for(int count, const std::function<void(int)>& f);

}  // namespace geofock
