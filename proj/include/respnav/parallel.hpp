#pragma once

#include <cstddef>
#include <functional>

namespace respnav {

// Worker cap shared by every parallel kernel. 0 means hardware concurrency.
void set_max_threads(unsigned n);
unsigned max_threads();

// Runs fn(i) for i in [0, n). Indices are handed out dynamically; fn must
// only write to state owned by index i so results do not depend on the split.
void parallel_for(std::size_t n, std::function<void(std::size_t)> const &fn);

} // namespace respnav
