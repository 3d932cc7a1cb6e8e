// parallel.hpp - deterministic fork/join over an index range.

#pragma once

#include <cstddef>
#include <functional>

namespace zenolock {

/// Worker count: ZENOLOCK_THREADS if set (>= 1), else hardware concurrency.
unsigned default_thread_count();

/// Calls body(i) for i in [0, count) on up to `threads` workers. Each index is
/// visited exactly once; callers write results into per-index slots and reduce
/// afterwards in index order, so results never depend on the thread count.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& body);

}  // namespace zenolock
