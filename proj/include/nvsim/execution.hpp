#pragma once

#include <cstddef>
#include <exception>
#include <vector>

namespace nvsim {

// Every data-parallel kernel takes one of these. `serial` is the reference
// path used by the tests; `parallel` runs the same loop body under OpenMP and
// must produce bit-identical output.
enum class Execution { serial, parallel };

// Runs body(i) for i in [0, n). Exceptions thrown by the body are captured per
// index and the lowest-index one is rethrown after the loop, so failures are
// reported identically on both paths.
template <class Body>
void for_each_index(Execution exec, std::size_t n, Body&& body) {
  std::vector<std::exception_ptr> failures(n);
  const auto count = static_cast<std::ptrdiff_t>(n);
  if (exec == Execution::parallel) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < count; ++i) {
      try {
        body(static_cast<std::size_t>(i));
      } catch (...) {
        failures[static_cast<std::size_t>(i)] = std::current_exception();
      }
    }
  } else {
    for (std::ptrdiff_t i = 0; i < count; ++i) {
      try {
        body(static_cast<std::size_t>(i));
      } catch (...) {
        failures[static_cast<std::size_t>(i)] = std::current_exception();
      }
    }
  }
  for (auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }
}

}  // namespace nvsim
