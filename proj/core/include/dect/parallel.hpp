#pragma once

#include <cstddef>

namespace dect {

// Worker-thread count used by every data-parallel loop in the library.
// Results never depend on this value: parallel loops only write disjoint
// outputs and reductions are evaluated serially.
void set_thread_count(int threads);
int thread_count();

// Resolves --threads / DECT_THREADS / hardware concurrency, in that order.
// A value <= 0 for `requested` means "not given".
int resolve_thread_count(int requested);

}  // namespace dect
