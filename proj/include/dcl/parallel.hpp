#pragma once

#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace dcl {

/// Runs f(i) for i in [0, n) across at most `threads` worker threads using
/// static chunking. Each index writes only its own output slot, so results do
/// not depend on the thread count. threads <= 1 runs inline.
template <typename F>
void parallel_for(std::size_t n, int threads, F&& f) {
  if (n == 0) return;
  if (threads <= 1 || n == 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(threads), n);
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < n; i += workers) f(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace dcl
