#pragma once

#include <functional>

namespace sdot {

/// Worker count used by per-cell and per-facet loops (default 1).
void set_num_threads(int threads);
int num_threads();

/// Runs body(k) for k in [0, count) over num_threads() static chunks.
/// Bodies must only write to slots owned by their index.
void parallel_for(int count, const std::function<void(int begin, int end)>& body);

}  // namespace sdot
