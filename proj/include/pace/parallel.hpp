#pragma once

#include <cstddef>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace pace {

/// Runs fn(i) for i in [0, n). Iterations must be independent; results written
/// by index stay deterministic regardless of scheduling.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn, bool parallel = true) {
#ifdef _OPENMP
  if (parallel && n > 1) {
#pragma omp parallel for schedule(dynamic, 1)
    for (long long i = 0; i < (long long)n; ++i) fn((std::size_t)i);
    return;
  }
#else
  (void)parallel;
#endif
  for (std::size_t i = 0; i < n; ++i) fn(i);
}

/// Same contract with a static chunked schedule, for cheap uniform bodies.
template <typename Fn>
void parallel_for_static(std::size_t n, Fn&& fn, bool parallel = true) {
#ifdef _OPENMP
  if (parallel && n > 1) {
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < (long long)n; ++i) fn((std::size_t)i);
    return;
  }
#else
  (void)parallel;
#endif
  for (std::size_t i = 0; i < n; ++i) fn(i);
}

inline int hardware_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

inline void set_thread_count(int n) {
#ifdef _OPENMP
  if (n > 0) omp_set_num_threads(n);
#else
  (void)n;
#endif
}

}  // namespace pace
