#pragma once

#include <cstddef>
#include <exception>
#include <mutex>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace pathfk {

/// How per-path loops are executed.
///
/// `serial` selects the reference loop: same iteration order, one thread.
/// Every parallel kernel writes each index into its own slot and performs
/// reductions afterwards in index order, so serial and parallel results
/// are bit-identical.
struct Execution {
  int threads = 0;  // 0 = OpenMP default
  bool serial = false;

  static Execution serial_reference() { return Execution{1, true}; }
  static Execution with_threads(int n) { return Execution{n, false}; }
};

template <class Body>
void parallel_for(std::size_t n, const Execution& exec, Body&& body) {
  if (exec.serial || n < 2) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
#ifdef _OPENMP
  // Exceptions cannot leave an OpenMP region; the one from the lowest index
  // is rethrown after the loop, matching what the serial loop would raise.
  const int threads = exec.threads > 0 ? exec.threads : omp_get_max_threads();
  const auto count = static_cast<long long>(n);
  std::exception_ptr error;
  long long error_index = count;
  std::mutex guard;
#pragma omp parallel for schedule(static) num_threads(threads)
  for (long long i = 0; i < count; ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
      const std::lock_guard<std::mutex> lock(guard);
      if (i < error_index) {
        error_index = i;
        error = std::current_exception();
      }
    }
  }
  if (error) std::rethrow_exception(error);
#else
  for (std::size_t i = 0; i < n; ++i) body(i);
#endif
}

}  // namespace pathfk
