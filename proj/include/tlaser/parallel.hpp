#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

#include "tlaser/tensor.hpp"

namespace tlaser {

namespace detail {
inline std::atomic<unsigned> g_thread_limit{0};  // 0 = hardware concurrency
}

// Caps the worker count used for per-slice parallel loops. 0 restores the
// default (all available cores).
inline void set_thread_limit(unsigned n) { detail::g_thread_limit = n; }

inline unsigned thread_limit() {
  const unsigned n = detail::g_thread_limit.load();
  if (n != 0) return n;
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs fn(k) for k in [0, count). Iterations must be independent; each writes
/// only its own output, so results match the sequential order exactly.
template <typename Fn>
void parallel_for(Index count, Fn&& fn) {
  const auto workers =
      static_cast<Index>(std::min<Index>(thread_limit(), count));
  if (workers <= 1) {
    for (Index k = 0; k < count; ++k) fn(k);
    return;
  }
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::jthread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (Index w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (Index k = w; k < count; k += workers) {
        try {
          fn(k);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          return;
        }
      }
    });
  }
  pool.clear();
  if (error) std::rethrow_exception(error);
}

}  // namespace tlaser
