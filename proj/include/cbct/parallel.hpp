#pragma once

#include <cstddef>
#include <functional>

namespace cbct {

/// Process-wide worker count used by the compute kernels. Defaults to 1.
void set_worker_count(int workers);
int worker_count();

/// Splits [0, n) into contiguous chunks and runs `body(begin, end)` on up to
/// worker_count() threads. Every index is handled by exactly one call, so
/// kernels that write disjoint outputs give identical results for any worker
/// count. The first exception thrown by a chunk is rethrown on the caller.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace cbct
