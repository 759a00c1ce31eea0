#ifndef MSPR_PARALLEL_HPP
#define MSPR_PARALLEL_HPP

#include <cstddef>
#include <exception>
#include <mutex>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace mspr {

/// Execution policy for the data-parallel kernels (trial simulation,
/// bootstrap replicates, permutation draws). Serial is the reference path;
/// Parallel distributes independent work items over OpenMP threads. Both
/// produce identical results because every work item owns a substream seeded
/// by its index and writes to its own output slot.
enum class Exec { Serial, Parallel };

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

/// Runs body(i) for i in [0, n). Exceptions thrown by work items are
/// captured and rethrown on the calling thread (first one wins).
template <class F>
void parallel_for(std::size_t n, Exec exec, F&& body) {
  if (exec == Exec::Serial) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::exception_ptr error;
  std::mutex error_mutex;
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
  for (long long i = 0; i < static_cast<long long>(n); ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
      std::lock_guard<std::mutex> lock(error_mutex);
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace mspr

#endif  // MSPR_PARALLEL_HPP
