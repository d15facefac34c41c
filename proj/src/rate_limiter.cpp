#include "vprobe/rate_limiter.hpp"

#include <thread>

namespace vprobe {

RateLimiter::RateLimiter(double requests_per_second)
    : rate_(requests_per_second), next_slot_(Clock::now()) {}

RateLimiter::Clock::time_point RateLimiter::acquire() {
  if (rate_ <= 0.0) return Clock::now();
  const auto interval = std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(1.0 / rate_));
  Clock::time_point slot;
  {
    std::lock_guard lock(mutex_);
    const auto now = Clock::now();
    slot = std::max(now, next_slot_);
    next_slot_ = slot + interval;
  }
  std::this_thread::sleep_until(slot);
  return slot;
}

}  // namespace vprobe
