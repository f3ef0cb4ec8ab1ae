#pragma once

#include <functional>

namespace mfsmp {

/// Runs fn(begin, end) over contiguous chunks of [0, n), possibly on worker
/// threads. Chunk boundaries and all outputs are independent of the worker
/// count; callers only write disjoint indices.
void parallel_for(int n, int workers, const std::function<void(int, int)>& fn);

}  // namespace mfsmp
