#pragma once

#include <algorithm>
#include <cstdlib>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace cmos {

/// Worker count for batch-parallel loops. `requested` <= 0 means "library
/// default"; the CMOS_THREADS environment variable caps the result either way.
inline int resolve_threads(int requested = 0) {
#ifdef _OPENMP
    int n = requested > 0 ? requested : omp_get_max_threads();
#else
    int n = 1;
    (void)requested;
#endif
    if (const char* env = std::getenv("CMOS_THREADS")) {
        const int cap = std::atoi(env);
        if (cap > 0) n = std::min(n, cap);
    }
    return std::max(1, n);
}

}  // namespace cmos
