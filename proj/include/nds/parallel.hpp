#pragma once

#include <cstddef>
#include <functional>

namespace nds {

/// Worker cap used by parallel_for when jobs <= 0. Defaults to the hardware concurrency.
void set_default_jobs(int jobs);
int default_jobs();

/// Run fn(i) for i in [0, count) on up to `jobs` threads. The first exception
/// thrown by any task is rethrown after all workers finish.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn, int jobs = 0);

}  // namespace nds
