#pragma once

#include <cstdint>
#include <exception>

namespace dds {

enum class Execution { Serial, Parallel };

/// body(i) for i in [0, n). Parallel runs use an OpenMP dynamic schedule; an
/// exception thrown by any iteration is rethrown after the loop.
template <typename F>
void for_each_index(std::int64_t n, Execution exec, F&& body) {
  if (exec == Execution::Serial) {
    for (std::int64_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::exception_ptr error;
#pragma omp parallel for schedule(dynamic, 1)
  for (std::int64_t i = 0; i < n; ++i) {
    try {
      body(i);
    } catch (...) {
#pragma omp critical(dds_for_each_index)
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace dds
