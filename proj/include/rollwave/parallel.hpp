#pragma once

#include <cstddef>
#include <functional>

namespace rollwave {

// Thread count from a request; values <= 0 fall back to ROLLWAVE_THREADS or 1.
int resolve_threads(int requested);

// Runs fn(i) for i in [0, n) on up to `threads` workers pulling indices from a shared
// counter. The first exception thrown by a task is rethrown after all workers join.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

}  // namespace rollwave
