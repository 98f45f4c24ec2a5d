#pragma once

#include <deque>
#include <memory>
#include <mutex>

#include "xlf/clock.hpp"

namespace xlf {

/// Sliding 60-second window: at most `requests_per_minute` acquisitions in any
/// window. acquire() blocks (on the given clock) until a slot frees up.
/// Acquisitions are serialized.
class RateLimiter {
 public:
  static constexpr std::chrono::seconds kWindow{60};

  RateLimiter(int requests_per_minute, std::shared_ptr<Clock> clock);

  void acquire();

  int requests_per_minute() const noexcept { return limit_; }

 private:
  int limit_;
  std::shared_ptr<Clock> clock_;
  std::mutex mutex_;
  std::deque<Clock::time_point> granted_;
};

}  // namespace xlf
