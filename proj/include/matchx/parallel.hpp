#pragma once

#include <cstddef>
#include <exception>

namespace matchx {

/// Execution policy for kernels that ship both a serial reference and an
/// OpenMP implementation. Both produce bit-identical results.
enum class Exec { serial, parallel };

/// Applies the MATCHX_THREADS cap (if set) to the OpenMP runtime.
/// Returns the resulting worker count.
int configure_threads();

int max_threads();

/// Runs fn(i) for i in [0, n), across OpenMP threads for Exec::parallel.
/// If any call throws, the exception of the smallest failing index is
/// rethrown after the loop.
template <class Fn>
void parallel_for(std::size_t n, Exec exec, Fn&& fn) {
  std::exception_ptr error;
  std::size_t error_index = n;
  const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic) if (exec == Exec::parallel && n > 1)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    try {
      fn(static_cast<std::size_t>(i));
    } catch (...) {
#pragma omp critical(matchx_parallel_for_error)
      if (static_cast<std::size_t>(i) < error_index) {
        error_index = static_cast<std::size_t>(i);
        error = std::current_exception();
      }
    }
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace matchx
