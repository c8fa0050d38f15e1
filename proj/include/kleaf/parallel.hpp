#pragma once

#include <algorithm>
#include <exception>
#include <thread>
#include <vector>

namespace kleaf {

/// Worker count for node-parallel loops (1 = serial). Results never depend on it.
void set_thread_count(int threads);
int thread_count();

/// Calls f(i) for i in [0, count) over contiguous chunks. If several indices
/// throw, the exception of the smallest index is rethrown.
template <class F>
void parallel_for(int count, F&& f) {
  const int threads = std::min(thread_count(), count);
  if (threads <= 1) {
    for (int i = 0; i < count; ++i) f(i);
    return;
  }
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      const int begin = static_cast<int>(static_cast<long>(count) * t / threads);
      const int end = static_cast<int>(static_cast<long>(count) * (t + 1) / threads);
      for (int i = begin; i < end; ++i) {
        try {
          f(i);
        } catch (...) {
          errors[t] = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  for (int t = 0; t < threads; ++t)
    if (errors[t]) std::rethrow_exception(errors[t]);
}

}  // namespace kleaf
