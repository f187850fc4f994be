#pragma once

#include <cstddef>
#include <functional>

namespace spherefeat {

// Fixed-size pool handed to the heavy operations. Work is split into
// contiguous chunks by index, and every index writes only its own output
// slot, so results do not depend on the worker count.
class WorkerPool {
 public:
  explicit WorkerPool(int workers = default_workers());

  int size() const { return workers_; }

  void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) const;

  /// SPHEREFEAT_WORKERS if set, otherwise the hardware concurrency.
  static int default_workers();

  /// Single-worker pool used when callers pass none.
  static const WorkerPool& serial();

 private:
  int workers_;
};

}  // namespace spherefeat
