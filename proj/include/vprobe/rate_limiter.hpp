#pragma once

#include <chrono>
#include <mutex>

namespace vprobe {

// Global request pacing shared by all workers: grants are scheduled one slot of
// 1/rate seconds apart, so any window of T seconds sees at most floor(T*rate)+1
// grants. rate <= 0 disables limiting.
class RateLimiter {
 public:
  using Clock = std::chrono::steady_clock;

  explicit RateLimiter(double requests_per_second);

  // Blocks until the caller may issue a request; returns the grant time.
  Clock::time_point acquire();

  double rate() const { return rate_; }

 private:
  double rate_;
  std::mutex mutex_;
  Clock::time_point next_slot_;
};

}  // namespace vprobe
