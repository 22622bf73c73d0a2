#pragma once

#include <cstddef>
#include <cstdint>
#include <exception>
#include <mutex>

#include <omp.h>

namespace squeeze {

// Execution policy for the data-parallel kernels. Every kernel writes into
// per-index slots and reduces in index order afterwards, so both policies
// produce bit-identical results.
enum class Exec { serial, parallel };

// Runs fn(i) for i in [0, n). Exceptions thrown inside the OpenMP region are
// captured and the first one is rethrown on the calling thread.
template <class Fn>
void for_each_index(std::size_t n, Exec exec, Fn&& fn) {
  if (exec == Exec::serial || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::exception_ptr error;
  std::mutex error_mutex;
  const auto count = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t i = 0; i < count; ++i) {
    try {
      fn(static_cast<std::size_t>(i));
    } catch (...) {
      std::lock_guard lock(error_mutex);
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace squeeze
