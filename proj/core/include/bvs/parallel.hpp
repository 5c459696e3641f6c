#pragma once

#include <cstddef>
#include <functional>

namespace bvs {

/// Runs task(i) for i in [0, count) on up to `threads` workers (0 = hardware
/// concurrency). Tasks must write only to their own output slot. If tasks
/// throw, the exception of the lowest failing index is rethrown.
void parallel_for(std::size_t count, std::size_t threads, const std::function<void(std::size_t)>& task);

std::size_t resolve_threads(std::size_t requested);

}  // namespace bvs
