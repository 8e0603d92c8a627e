#pragma once

#include <deque>

#include "pbecc/sim/time.hpp"

namespace pbecc::cc {

// Running maximum over a sliding time window whose length may change
// between updates (BtlBw uses ten RTprops).
class WindowedMax {
 public:
  void update(SimTime now, double value, Duration window) {
    while (!samples_.empty() && samples_.back().value <= value) samples_.pop_back();
    samples_.push_back({now, value});
    expire(now, window);
  }

  double get(SimTime now, Duration window) {
    expire(now, window);
    return samples_.empty() ? 0.0 : samples_.front().value;
  }

  double peek() const { return samples_.empty() ? 0.0 : samples_.front().value; }

  void reset() { samples_.clear(); }

 private:
  struct Sample {
    SimTime at;
    double value;
  };

  void expire(SimTime now, Duration window) {
    while (samples_.size() > 1 && now - samples_.front().at > window) samples_.pop_front();
  }

  std::deque<Sample> samples_;
};

// Minimum RTT with the timestamp of the last time it was refreshed. A sample
// replaces the minimum when it is no larger or when the minimum has gone
// stale.
class MinRttFilter {
 public:
  explicit MinRttFilter(Duration window = std::chrono::seconds(10)) : window_(window) {}

  // Returns true when the stored minimum had expired before this sample.
  bool update(SimTime now, Duration rtt) {
    const bool stale = expired(now);
    if (!known_ || rtt <= min_ || stale) {
      min_ = rtt;
      stamp_ = now;
      known_ = true;
    }
    return stale;
  }

  bool known() const { return known_; }
  Duration get() const { return known_ ? min_ : Duration::zero(); }
  SimTime stamp() const { return stamp_; }
  bool expired(SimTime now) const { return known_ && now - stamp_ > window_; }
  void refresh(SimTime now) { stamp_ = now; }
  Duration window() const { return window_; }

 private:
  Duration window_;
  Duration min_{0};
  SimTime stamp_{};
  bool known_ = false;
};

}  // namespace pbecc::cc
