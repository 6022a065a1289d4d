#ifndef CROSSAUG_PARALLEL_H_
#define CROSSAUG_PARALLEL_H_

#include <cstddef>
#include <exception>
#include <vector>

namespace crossaug {

// Runs body(i) for i in [0, n) across OpenMP threads. An exception thrown by
// any iteration is rethrown on the calling thread (the lowest index wins).
template <class Body>
void parallel_for(std::size_t n, Body&& body) {
  std::vector<std::exception_ptr> errors(n);
#pragma omp parallel for schedule(static) if (n > 1)
  for (std::size_t i = 0; i < n; ++i) {
    try {
      body(i);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace crossaug

#endif  // CROSSAUG_PARALLEL_H_
