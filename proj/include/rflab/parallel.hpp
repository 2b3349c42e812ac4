#pragma once

#include <cstddef>
#include <functional>

namespace rflab {

/// Number of worker threads used by path runners (defaults to the hardware count).
void set_worker_count(unsigned workers);
unsigned worker_count();

/// Calls body(i) for i in [0, count) across the worker pool. Each index is processed
/// exactly once; callers write results into per-index slots so reductions stay ordered.
void parallel_for(std::size_t count, const std::function<void(std::size_t)> &body);

}  // namespace rflab
