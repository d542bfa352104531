#pragma once

#include <cstddef>
#include <exception>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace aprl {

// Execution policy for the data-parallel kernels (forest trees, CV folds,
// ensemble probes, neighbor scans). Kernels write disjoint output slots and
// derive per-index RNG streams, so the two policies produce bit-identical
// results; the test suite leans on that equivalence and the serial path
// doubles as the reference implementation.
enum class Exec { serial, parallel };

inline bool openmp_enabled() {
#ifdef _OPENMP
  return true;
#else
  return false;
#endif
}

inline int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

inline void set_threads(int n) {
#ifdef _OPENMP
  if (n > 0) omp_set_num_threads(n);
#else
  (void)n;
#endif
}

// Runs body(i) for i in [0, n). An exception thrown inside the parallel
// region is captured and rethrown on the calling thread (first one wins).
template <class Body>
void parallel_for(Exec exec, std::size_t n, Body&& body) {
#ifdef _OPENMP
  if (exec == Exec::parallel && n > 1) {
    std::exception_ptr error;
#pragma omp parallel for schedule(dynamic)
    for (long long i = 0; i < static_cast<long long>(n); ++i) {
      try {
        body(static_cast<std::size_t>(i));
      } catch (...) {
#pragma omp critical(aprl_parallel_for_error)
        {
          if (!error) error = std::current_exception();
        }
      }
    }
    if (error) std::rethrow_exception(error);
    return;
  }
#else
  (void)exec;
#endif
  for (std::size_t i = 0; i < n; ++i) body(i);
}

}  // namespace aprl
