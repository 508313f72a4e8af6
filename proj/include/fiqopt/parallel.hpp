#pragma once

#include <cstddef>
#include <functional>

namespace fiqopt {

// Resolves a requested worker count; 0 means "all hardware threads".
unsigned resolve_threads(unsigned requested);

// Runs run_range(begin, end) over a static partition of [0, n) into at most
// `threads` contiguous chunks, one worker each. Chunk boundaries depend only
// on (n, threads), so workers writing to disjoint index ranges produce
// results independent of scheduling. The first worker exception (in chunk
// order) is rethrown on the calling thread.
void parallel_for(std::size_t n, unsigned threads,
                  const std::function<void(std::size_t, std::size_t)>& run_range);

}  // namespace fiqopt
