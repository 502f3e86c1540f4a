#pragma once

#include <cstddef>
#include <functional>

namespace nnose {

/// Worker count from NNOSE_THREADS: unset or 0 means all hardware threads.
std::size_t configured_threads();

/// Runs body(i) for i in [0, n) across up to `threads` workers (0 = use
/// configured_threads()). Each index is visited exactly once; callers write
/// results into per-index slots so output never depends on scheduling.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body,
                  std::size_t threads = 0);

}  // namespace nnose
