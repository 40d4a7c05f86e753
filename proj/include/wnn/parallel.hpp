#pragma once

#include <cstddef>
#include <functional>

namespace wnn {

/// Worker count for a requested value; 0 means one per hardware thread.
[[nodiscard]] int resolve_threads(int requested) noexcept;

/// Runs body(index, worker) for every index in [0, n) on `threads` workers.
/// Indices are handed out dynamically; the first exception thrown by any
/// call is rethrown after all workers stop.
void parallel_for(std::size_t n, int threads,
                  const std::function<void(std::size_t index, int worker)>& body);

}  // namespace wnn
