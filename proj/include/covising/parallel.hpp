#pragma once

#include <cstddef>
#include <functional>

namespace covising {

// Runs fn(i) for i in [0, count). Work items must be independent and write
// only to caller-owned slots indexed by i, so the result is the same for any
// thread count. Exceptions from workers are rethrown on the calling thread.
void parallel_for(std::size_t count, int threads,
                  const std::function<void(std::size_t)>& fn);

}  // namespace covising
