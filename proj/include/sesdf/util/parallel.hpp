#pragma once

#include <cstddef>
#include <functional>

namespace sesdf {

// Process-wide worker cap (the CLI's --threads). 1 means strictly serial.
void set_max_threads(int threads);
int max_threads();

// Runs body(i) for i in [0, count). Work items are independent; callers that
// need determinism write into per-item slots and reduce in index order.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace sesdf
