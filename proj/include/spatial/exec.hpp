#ifndef SPATIAL_EXEC_HPP
#define SPATIAL_EXEC_HPP

#include <chrono>
#include <cstdint>
#include <utility>

namespace spatial {

// Whether batch operations may fan work out across threads. Sequential mode
// is deterministic and serves as the differential baseline in tests.
enum class ExecMode { kSequential, kParallel };

// Applies fn(i) for i in [0, n). In parallel mode iterations may run
// concurrently and in any order; fn must not throw.
template <class Fn>
void parallel_for(std::int64_t n, ExecMode mode, Fn &&fn) {
  if (mode == ExecMode::kParallel) {
#pragma omp parallel for schedule(dynamic, 64)
    for (std::int64_t i = 0; i < n; ++i)
      fn(i);
  } else {
    for (std::int64_t i = 0; i < n; ++i)
      fn(i);
  }
}

class StopWatch {
public:
  StopWatch() : start_(std::chrono::steady_clock::now()) {}

  double lap_ms() {
    auto now = std::chrono::steady_clock::now();
    double ms = std::chrono::duration<double, std::milli>(now - start_).count();
    start_ = now;
    return ms;
  }

private:
  std::chrono::steady_clock::time_point start_;
};

} // namespace spatial

#endif
