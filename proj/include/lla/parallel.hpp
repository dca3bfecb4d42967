#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace lla {

// Worker count for index-parallel loops. Every loop body writes only to its
// own index, so results do not depend on the worker count.
class Executor {
 public:
  explicit Executor(unsigned workers = 1) : workers_(std::max(1u, workers)) {}

  unsigned workers() const { return workers_; }

  template <typename Fn>
  void parallel_for(std::size_t n, Fn&& fn) const {
    if (workers_ == 1 || n < 2) {
      for (std::size_t i = 0; i < n; ++i) fn(i);
      return;
    }
    const std::size_t nthreads = std::min<std::size_t>(workers_, n);
    std::vector<std::thread> threads;
    threads.reserve(nthreads);
    std::exception_ptr error;
    std::mutex error_mutex;
    for (std::size_t t = 0; t < nthreads; ++t) {
      threads.emplace_back([&, t] {
        try {
          for (std::size_t i = t; i < n; i += nthreads) fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      });
    }
    for (auto& th : threads) th.join();
    if (error) std::rethrow_exception(error);
  }

 private:
  unsigned workers_;
};

}  // namespace lla
