#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string_view>

#include "pbecc/cc/controller.hpp"

namespace pbecc::cc {

struct AimdConfig {
  double mss_bits = 12000.0;
  int initial_cwnd_packets = 10;
  int min_cwnd_packets = 2;
  double decrease = 0.5;
};

// Loss-based window control: slow start to the first loss, then one MSS per
// RTT up and a halving on loss, at most once per RTT.
class AimdSender : public CongestionController {
 public:
  explicit AimdSender(AimdConfig config = {})
      : config_(config), cwnd_(config.initial_cwnd_packets * config.mss_bits) {}

  void on_ack(const AckEvent& ack) override {
    now_ = ack.now;
    if (min_rtt_ == Duration::zero() || ack.rtt < min_rtt_) min_rtt_ = ack.rtt;
    srtt_ = srtt_ == Duration::zero() ? ack.rtt : (7 * srtt_ + ack.rtt) / 8;
    const double bits = static_cast<double>(ack.acked_bits);
    if (cwnd_ < ssthresh_) {
      cwnd_ += bits;
    } else {
      cwnd_ += config_.mss_bits * bits / cwnd_;
    }
  }

  void on_loss(SimTime now, std::int64_t /*lost_bits*/) override {
    if (recovery_until_ && now < *recovery_until_) return;
    cwnd_ = std::max(config_.min_cwnd_packets * config_.mss_bits, cwnd_ * config_.decrease);
    ssthresh_ = cwnd_;
    recovery_until_ = now + (srtt_ > Duration::zero() ? srtt_ : std::chrono::milliseconds(100));
  }

  double pacing_rate_bps() const override { return kNoWindow; }
  double cwnd_bits() const override { return cwnd_; }
  std::string_view phase_name() const override { return cwnd_ < ssthresh_ ? "SlowStart" : "CongestionAvoidance"; }
  Duration rtprop() const override { return min_rtt_; }

  double cwnd_packets() const { return cwnd_ / config_.mss_bits; }
  void set_cwnd_packets(double packets) { cwnd_ = packets * config_.mss_bits; }

 private:
  AimdConfig config_;
  double cwnd_;
  double ssthresh_ = kNoWindow;
  Duration min_rtt_{0};
  Duration srtt_{0};
  SimTime now_{};
  std::optional<SimTime> recovery_until_;
};

}  // namespace pbecc::cc
