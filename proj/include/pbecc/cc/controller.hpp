#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string_view>

#include "pbecc/est/feedback.hpp"
#include "pbecc/sim/time.hpp"

namespace pbecc::cc {

struct AckEvent {
  SimTime now{};
  std::uint64_t seq = 0;
  std::int64_t acked_bits = 0;
  SimTime sent_at{};
  Duration rtt{0};
  double delivery_rate_bps = 0.0;  // 0 when the ack yields no valid sample
  bool app_limited = false;
  bool round_start = false;        // a packet-timed round trip just ended
  std::int64_t inflight_bits = 0;  // after this ack
  std::optional<est::AckPayload> feedback;
};

// Sender-side congestion control. The transport calls `advance` before each
// send opportunity and after each ack so time-driven phases can move on.
class CongestionController {
 public:
  virtual ~CongestionController() = default;

  virtual void on_start(SimTime /*now*/) {}
  virtual void on_ack(const AckEvent& ack) = 0;
  virtual void on_loss(SimTime /*now*/, std::int64_t /*lost_bits*/) {}
  virtual void advance(SimTime /*now*/) {}

  // Bits per second; infinity means unpaced, 0 means nothing to send.
  virtual double pacing_rate_bps() const = 0;
  // Bits; infinity means no window.
  virtual double cwnd_bits() const = 0;
  virtual std::string_view phase_name() const = 0;

  virtual Duration rtprop() const { return Duration::zero(); }
  virtual double btlbw_bps() const { return 0.0; }
  virtual double fair_share_bps() const { return 0.0; }
  // Whether in-flight data is expected to stay under BtlBw * RTprop.
  virtual bool bounds_inflight_to_bdp() const { return false; }
  // When false the flow offers load regardless of acks (CBR).
  virtual bool reacts_to_acks() const { return true; }
};

inline constexpr double kNoWindow = std::numeric_limits<double>::infinity();

}  // namespace pbecc::cc
