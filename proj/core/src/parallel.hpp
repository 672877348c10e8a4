#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace dermo::detail {

// Runs fn(i) for i in [0, n) on up to `threads` workers, striding the index
// space. Each index must write only its own slot so the outcome does not
// depend on scheduling. The first exception is rethrown after all join.
template <typename Fn>
void parallel_for(std::size_t n, int threads, Fn fn) {
  const std::size_t workers = std::min<std::size_t>(n, std::size_t(std::max(threads, 1)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::exception_ptr failure;
  std::mutex failure_mu;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < n; i += workers) fn(i);
      } catch (...) {
        std::lock_guard lock(failure_mu);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace dermo::detail
