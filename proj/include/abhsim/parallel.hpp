#pragma once

#include <cstddef>
#include <functional>

namespace abhsim {

/// Worker count for sweeps: ABHSIM_THREADS if set to a positive integer,
/// otherwise std::thread::hardware_concurrency() (at least 1).
std::size_t sweep_threads();

/// Runs body(i) for i in [0, n) on up to sweep_threads() workers. Items are
/// independent; the first exception thrown by any item is rethrown after all
/// workers stop.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace abhsim
