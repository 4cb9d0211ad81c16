#ifndef CARNOT_PARALLEL_HPP
#define CARNOT_PARALLEL_HPP

#include <cstddef>
#include <functional>

namespace carnot {

/// Thread cap: min(hardware_concurrency, CARNOT_KIT_THREADS env var if set).
int max_threads();

/// Runs fn(i) for i in [0, n). Work is split in contiguous chunks over at
/// most max_threads() threads; fn must write only to its own slot so results
/// are identical for any thread count. Reduction is the caller's job, done
/// in index order.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace carnot

#endif
