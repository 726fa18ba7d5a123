#pragma once

#include <cstddef>
#include <functional>

namespace gpnn {

/// Number of worker threads to use: GPNN_THREADS if set and positive,
/// otherwise std::thread::hardware_concurrency() (at least 1).
std::size_t default_thread_count();

/// Runs body(i) for every i in [0, count) using up to `threads` workers.
/// Work is split into contiguous chunks. Each index is processed exactly
/// once; callers write results into per-index slots and reduce afterwards in
/// index order, which keeps results independent of the thread count.  If any
/// body throws, the exception from the lowest failing chunk is rethrown.
void parallel_for(std::size_t count, std::size_t threads, const std::function<void(std::size_t)>& body);

}  // namespace gpnn
