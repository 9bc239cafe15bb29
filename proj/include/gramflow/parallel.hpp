#pragma once

#include <cstddef>
#include <functional>

namespace gramflow {

// Worker count for the few hot loops, read once from GRAMFLOW_THREADS
// (default 1, clamped to [1, 64]).
int thread_count();

// Run fn(begin, end) over fixed half-open chunks of [0, total). Chunk
// boundaries depend only on `total`, never on the worker count, and
// every chunk writes to disjoint state, so results are bit-identical
// whatever GRAMFLOW_THREADS says.
void parallel_chunks(std::size_t total,
                     const std::function<void(std::size_t, std::size_t)>& fn);

}  // namespace gramflow
