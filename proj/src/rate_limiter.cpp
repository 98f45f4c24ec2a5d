#include "xlf/rate_limiter.hpp"

#include <thread>

#include "xlf/error.hpp"

namespace xlf {

void SystemClock::sleep_for(duration d) { std::this_thread::sleep_for(d); }

RateLimiter::RateLimiter(int requests_per_minute, std::shared_ptr<Clock> clock)
    : limit_(requests_per_minute), clock_(std::move(clock)) {
  if (limit_ <= 0) throw ConfigError("requests_per_minute must be > 0");
  if (!clock_) clock_ = std::make_shared<SystemClock>();
}

void RateLimiter::acquire() {
  std::lock_guard lock(mutex_);
  for (;;) {
    const auto now = clock_->now();
    while (!granted_.empty() && now - granted_.front() >= kWindow) granted_.pop_front();
    if (granted_.size() < static_cast<std::size_t>(limit_)) {
      granted_.push_back(now);
      return;
    }
    clock_->sleep_for(granted_.front() + kWindow - now);
  }
}

}  // namespace xlf
