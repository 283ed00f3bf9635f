#pragma once

#include <functional>

namespace lps {

/// Worker cap: LPS_LAB_THREADS when set, hardware concurrency otherwise.
int max_threads();

/// Runs fn(0..n-1) on up to max_threads() workers. Callers store results by
/// index and reduce sequentially afterwards, so the outcome is independent of
/// scheduling. The first exception thrown by any worker is rethrown.
void parallel_for(int n, const std::function<void(int)>& fn);

} // namespace lps
