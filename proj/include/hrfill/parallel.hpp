#pragma once

#include <cstddef>
#include <functional>

namespace hrfill {

// Resolves a requested thread count: 0 means "all hardware threads".
std::size_t resolve_threads(std::size_t requested);

// Runs fn(i) for i in [0, n) on up to `threads` workers. Work items must
// write only to their own output slot; results are then independent of the
// thread count. The first exception thrown by any item is rethrown.
void parallel_for(std::size_t n, std::size_t threads,
                  const std::function<void(std::size_t)>& fn);

}  // namespace hrfill
