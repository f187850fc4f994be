#include "spherefeat/parallel.hpp"

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace spherefeat {

WorkerPool::WorkerPool(int workers) : workers_(std::max(1, workers)) {}

int WorkerPool::default_workers() {
  if (const char* env = std::getenv("SPHEREFEAT_WORKERS")) {
    int n = std::atoi(env);
    if (n >= 1) return n;
  }
  unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

const WorkerPool& WorkerPool::serial() {
  static const WorkerPool pool(1);
  return pool;
}

void WorkerPool::parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) const {
  std::size_t nw = std::min<std::size_t>(static_cast<std::size_t>(workers_), n);
  if (nw <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::exception_ptr first_error;
  std::mutex err_mutex;
  std::vector<std::thread> threads;
  threads.reserve(nw);
  for (std::size_t w = 0; w < nw; ++w) {
    std::size_t lo = n * w / nw, hi = n * (w + 1) / nw;
    threads.emplace_back([&, lo, hi] {
      try {
        for (std::size_t i = lo; i < hi; ++i) fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace spherefeat
