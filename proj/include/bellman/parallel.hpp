#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace bellman {

/// Runs fn(i) for i in [begin, end) on at most `threads` workers; blocks until done.
/// Chunks are contiguous, so results written per index are independent of the thread count.
template <typename Fn>
void parallel_for(std::size_t begin, std::size_t end, unsigned threads, Fn const& fn) {
  if (end <= begin) return;
  std::size_t n = end - begin;
  unsigned workers = std::max(1U, std::min<unsigned>(threads, static_cast<unsigned>(std::min<std::size_t>(n, 1024))));
  if (workers == 1) {
    for (std::size_t i = begin; i < end; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  std::size_t chunk = (n + workers - 1) / workers;
  for (unsigned w = 0; w < workers; ++w) {
    std::size_t lo = begin + w * chunk;
    std::size_t hi = std::min(end, lo + chunk);
    pool.emplace_back([&, lo, hi, w] {
      try {
        for (std::size_t i = lo; i < hi; ++i) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

inline unsigned default_thread_count() { return std::max(1U, std::thread::hardware_concurrency()); }

}  // namespace bellman
