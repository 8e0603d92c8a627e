#pragma once

#include <cstdint>
#include <optional>

#include "pbecc/sim/time.hpp"

namespace pbecc {

inline constexpr std::int64_t kDefaultPacketBits = 12000;  // 1500 bytes

struct Packet {
  std::uint32_t flow_id = 0;
  std::uint64_t seq = 0;
  std::int64_t size_bits = kDefaultPacketBits;
  SimTime sent_at{};
  std::optional<SimTime> delivered_at;
  double harq_delay_ms = 0.0;
  // Sender state echoed to the client: current pacing rate and RTprop estimate.
  double sender_rate_bps = 0.0;
  Duration sender_rtprop{0};
};

// One row of the per-packet trace.
struct PacketRecord {
  std::uint32_t flow_id = 0;
  std::uint64_t seq = 0;
  std::int64_t size_bits = kDefaultPacketBits;
  std::int64_t sent_us = 0;
  std::optional<std::int64_t> delivered_us;
  double harq_delay_ms = 0.0;
  bool dropped = false;

  double owd_ms() const {
    return delivered_us ? static_cast<double>(*delivered_us - sent_us) / 1000.0 : 0.0;
  }
};

}  // namespace pbecc
