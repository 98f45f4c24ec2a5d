#pragma once

#include <chrono>
#include <mutex>

namespace xlf {

/// Time source used by rate limiting and retry backoff, so tests can run on
/// virtual time.
class Clock {
 public:
  using duration = std::chrono::steady_clock::duration;
  using time_point = std::chrono::steady_clock::time_point;

  virtual ~Clock() = default;
  virtual time_point now() const = 0;
  virtual void sleep_for(duration d) = 0;
};

class SystemClock final : public Clock {
 public:
  time_point now() const override { return std::chrono::steady_clock::now(); }
  void sleep_for(duration d) override;
};

/// Time only moves when someone sleeps or calls advance().
class VirtualClock final : public Clock {
 public:
  time_point now() const override {
    std::lock_guard lock(mutex_);
    return now_;
  }
  void sleep_for(duration d) override { advance(d); }
  void advance(duration d) {
    std::lock_guard lock(mutex_);
    now_ += d;
    slept_ += d;
  }
  duration total_slept() const {
    std::lock_guard lock(mutex_);
    return slept_;
  }

 private:
  mutable std::mutex mutex_;
  time_point now_{};
  duration slept_{};
};

}  // namespace xlf
