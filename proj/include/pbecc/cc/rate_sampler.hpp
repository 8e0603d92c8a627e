#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>

#include "pbecc/sim/time.hpp"

namespace pbecc::cc {

// Delivery-rate bookkeeping: each packet remembers how much had been
// delivered when it left; its ack turns the difference into a rate over the
// longer of the send and ack intervals.
struct SendState {
  std::int64_t delivered_bits = 0;
  SimTime delivered_time{};
  SimTime first_sent_time{};
  bool app_limited = false;
};

struct RateSample {
  double rate_bps = 0.0;
  Duration interval{0};
  bool app_limited = false;
  std::int64_t prior_delivered_bits = 0;
};

class RateSampler {
 public:
  SendState on_send(SimTime now, std::int64_t inflight_bits) {
    if (inflight_bits == 0) {
      first_sent_time_ = now;
      delivered_time_ = now;
    }
    SendState s;
    s.delivered_bits = delivered_bits_;
    s.delivered_time = delivered_time_;
    s.first_sent_time = first_sent_time_;
    s.app_limited = app_limited_until_ > delivered_bits_;
    return s;
  }

  std::optional<RateSample> on_ack(SimTime now, SimTime sent_at, std::int64_t bits,
                                   const SendState& s, Duration min_rtt) {
    delivered_bits_ += bits;
    delivered_time_ = now;
    first_sent_time_ = sent_at;
    const Duration send_elapsed = sent_at - s.first_sent_time;
    const Duration ack_elapsed = now - s.delivered_time;
    const Duration interval = std::max(send_elapsed, ack_elapsed);
    if (interval <= Duration::zero() || interval < min_rtt) return std::nullopt;
    RateSample r;
    r.interval = interval;
    r.app_limited = s.app_limited;
    r.prior_delivered_bits = s.delivered_bits;
    r.rate_bps = static_cast<double>(delivered_bits_ - s.delivered_bits) * 1e6 /
                 static_cast<double>(interval.count());
    return r;
  }

  void mark_app_limited(std::int64_t inflight_bits) {
    app_limited_until_ = std::max<std::int64_t>(1, delivered_bits_ + inflight_bits);
  }

  std::int64_t delivered_bits() const { return delivered_bits_; }

 private:
  std::int64_t delivered_bits_ = 0;
  SimTime delivered_time_{};
  SimTime first_sent_time_{};
  std::int64_t app_limited_until_ = 0;
};

}  // namespace pbecc::cc
