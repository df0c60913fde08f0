#pragma once

#include <cstddef>
#include <functional>

namespace onofri {

/// Worker count: hardware concurrency, capped by ONOFRI_LAB_THREADS when set.
unsigned worker_count();

/// Runs body(i) for i in [0, n). Iterations must be independent.
/// Exceptions thrown by body are rethrown on the calling thread.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace onofri
