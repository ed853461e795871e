#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace dcom {

/// Worker cap from DCOM_THREADS; 0, unset, or unparsable means sequential.
inline std::size_t thread_budget() {
  const char* env = std::getenv("DCOM_THREADS");
  if (env == nullptr) return 1;
  try {
    const long v = std::stol(env);
    return v <= 0 ? 1 : static_cast<std::size_t>(v);
  } catch (...) {
    return 1;
  }
}

/// Runs fn(begin, end) over contiguous chunks of [0, n). Results must be
/// written to per-index slots so the output does not depend on scheduling.
template <typename Fn>
void parallel_for_chunks(std::size_t n, std::size_t threads, Fn&& fn) {
  threads = std::max<std::size_t>(1, std::min(threads, n));
  if (threads <= 1) {
    if (n > 0) fn(std::size_t{0}, n);
    return;
  }
  std::vector<std::thread> workers;
  std::vector<std::exception_ptr> errors(threads);
  const std::size_t chunk = (n + threads - 1) / threads;
  for (std::size_t t = 0; t < threads; ++t) {
    const std::size_t begin = t * chunk;
    const std::size_t end = std::min(n, begin + chunk);
    if (begin >= end) break;
    workers.emplace_back([&, t, begin, end] {
      try {
        fn(begin, end);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& w : workers) w.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace dcom
