#pragma once

#include <cstddef>
#include <exception>

namespace vpdirac::detail {

/// Static-schedule OpenMP loop over [0, count). An exception thrown by `body`
/// is carried out of the parallel region; if several iterations throw, the
/// one with the smallest index is rethrown.
template <class F>
void parallel_for(std::ptrdiff_t count, F&& body) {
  std::exception_ptr error;
  std::ptrdiff_t error_index = count;
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    try {
      body(i);
    } catch (...) {
#pragma omp critical(vpdirac_parallel_error)
      if (i < error_index) {
        error_index = i;
        error = std::current_exception();
      }
    }
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace vpdirac::detail
