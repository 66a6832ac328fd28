#pragma once

#include <cstddef>
#include <functional>

namespace resched {

/// Runs fn(0..count-1) on up to `threads` workers. The exception from the
/// lowest failing index is rethrown after all workers join.
void parallel_for(std::size_t count, std::size_t threads, const std::function<void(std::size_t)>& fn);

}  // namespace resched
