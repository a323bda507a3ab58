#pragma once

#include <cstddef>
#include <functional>

namespace tecnet {

/// Runs fn(i) for i in [0, n) on up to hardware_concurrency threads. The
/// first exception thrown by any call is rethrown after all workers finish.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace tecnet
