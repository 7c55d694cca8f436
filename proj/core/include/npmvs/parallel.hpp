#pragma once

#include <cstddef>
#include <functional>

namespace npmvs {

/// Worker count: NP_MVS_THREADS when set to a positive integer, otherwise the
/// number of hardware threads.
int thread_count();

/// Runs body(i) for i in [begin, end) over contiguous chunks. Each index is
/// visited exactly once; callers must only write to index-owned state.
void parallel_for(std::size_t begin, std::size_t end,
                  const std::function<void(std::size_t)>& body);

}  // namespace npmvs
