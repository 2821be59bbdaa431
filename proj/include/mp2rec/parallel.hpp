#pragma once

#include <cstddef>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace mp2rec {

// Execution policy for the data-parallel paths. threads == 1 selects the
// serial reference implementations; anything else runs the OpenMP kernels.
// Both paths are written to produce bit-identical results: every parallel
// loop writes disjoint slots and reductions happen in a fixed order, so the
// policy never changes program output, only wall time.
struct ExecPolicy {
    int threads = 0;  // 0 = library default (all hardware threads)

    bool serial() const { return threads == 1; }

    int resolved_threads() const {
#ifdef _OPENMP
        return threads <= 0 ? omp_get_max_threads() : threads;
#else
        return 1;
#endif
    }

    static ExecPolicy serial_policy() { return ExecPolicy{1}; }
    static ExecPolicy parallel_policy(int threads = 0) { return ExecPolicy{threads}; }
};

}  // namespace mp2rec
