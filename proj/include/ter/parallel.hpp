#pragma once

#include <cstddef>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace ter {

// Scoring, feature extraction and per-query evaluation are data-parallel:
// every element is computed independently into a preallocated slot and any
// reduction happens afterwards, serially, in index order. Results are
// therefore identical for every thread count, including 1.

enum class Execution { serial, parallel };

// Process-wide cap applied by parallel_for; 0 means the OpenMP default.
void set_thread_cap(int threads);
int thread_cap();

template <typename Fn>
void parallel_for(std::size_t n, Execution exec, Fn&& fn) {
#ifdef _OPENMP
    if (exec == Execution::parallel && n > 1) {
        int cap = thread_cap();
        if (cap > 0) {
#pragma omp parallel for schedule(static) num_threads(cap)
            for (long long i = 0; i < static_cast<long long>(n); ++i)
                fn(static_cast<std::size_t>(i));
        } else {
#pragma omp parallel for schedule(static)
            for (long long i = 0; i < static_cast<long long>(n); ++i)
                fn(static_cast<std::size_t>(i));
        }
        return;
    }
#else
    (void)exec;
#endif
    for (std::size_t i = 0; i < n; ++i) fn(i);
}

}  // namespace ter
