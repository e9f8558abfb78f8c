#pragma once

#include <cstdint>

#ifdef MSGIBBS_HAVE_OPENMP
#include <omp.h>
#endif

namespace multiscale::exec {

// threads == 1 is the serial reference path: a plain loop with no OpenMP
// region at all. threads == 0 means "use all available". Every kernel in this
// project writes each output element independently of iteration order, so the
// parallel path is bit-identical to the serial one; tests assert this.
inline int hardware_threads() {
#ifdef MSGIBBS_HAVE_OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

inline int resolve_threads(int threads) {
    if (threads <= 0) return hardware_threads();
    return threads;
}

template <class F>
void parallel_for(std::int64_t n, int threads, F&& body) {
    threads = resolve_threads(threads);
    if (threads == 1) {
        for (std::int64_t i = 0; i < n; ++i) body(i);
        return;
    }
#ifdef MSGIBBS_HAVE_OPENMP
#pragma omp parallel for schedule(static) num_threads(threads)
    for (std::int64_t i = 0; i < n; ++i) body(i);
#else
    for (std::int64_t i = 0; i < n; ++i) body(i);
#endif
}

}  // namespace multiscale::exec
