#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>

#include "pbecc/est/bottleneck.hpp"

namespace pbecc::est {

inline constexpr double kFeedbackPacketBits = 12000.0;  // 1500-byte packet

// Capacity is fed back as the gap between two 1500-byte sends, in
// microseconds so that rates above 12 Mbit/s still resolve.
inline std::uint32_t interval_from_rate(double bits_per_subframe) {
  if (!(bits_per_subframe > 0)) return std::numeric_limits<std::uint32_t>::max();
  const double us = std::round(kFeedbackPacketBits / bits_per_subframe * 1000.0);
  return static_cast<std::uint32_t>(std::clamp(us, 1.0, 4294967295.0));
}

inline double rate_from_interval_bps(std::uint32_t interval_us) {
  if (interval_us == 0) throw std::invalid_argument("feedback interval must be > 0");
  return kFeedbackPacketBits * 1e6 / static_cast<double>(interval_us);
}

struct AckPayload {
  std::uint32_t interval_us = std::numeric_limits<std::uint32_t>::max();
  bool internet_state = false;
  bool drain_request = false;
  std::uint8_t active_cells = 1;
  std::uint32_t fair_share_bits_per_subframe = 0;
  std::uint64_t echo_seq = 0;
  std::int64_t echo_send_time_us = 0;

  static constexpr std::size_t kWireSize = 4 + 1 + 1 + 4 + 8 + 8;

  BottleneckState state() const {
    return internet_state ? BottleneckState::Internet : BottleneckState::Wireless;
  }
  double rate_bps() const { return rate_from_interval_bps(interval_us); }
  double fair_share_bps() const { return fair_share_bits_per_subframe * 1000.0; }

  // Little-endian: interval, flags (bit 0 state, bit 1 drain), active
  // cells, fair share, echoed sequence, echoed send time.
  std::array<std::uint8_t, kWireSize> encode() const {
    std::array<std::uint8_t, kWireSize> out{};
    std::size_t pos = 0;
    auto put = [&](std::uint64_t v, std::size_t bytes) {
      for (std::size_t i = 0; i < bytes; ++i) out[pos++] = static_cast<std::uint8_t>(v >> (8 * i));
    };
    put(interval_us, 4);
    put((internet_state ? 1u : 0u) | (drain_request ? 2u : 0u), 1);
    put(active_cells, 1);
    put(fair_share_bits_per_subframe, 4);
    put(echo_seq, 8);
    put(static_cast<std::uint64_t>(echo_send_time_us), 8);
    return out;
  }

  static AckPayload decode(std::span<const std::uint8_t> in) {
    if (in.size() != kWireSize) throw std::invalid_argument("ACK payload has wrong size");
    std::size_t pos = 0;
    auto get = [&](std::size_t bytes) {
      std::uint64_t v = 0;
      for (std::size_t i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(in[pos++]) << (8 * i);
      return v;
    };
    AckPayload p;
    p.interval_us = static_cast<std::uint32_t>(get(4));
    const auto flags = get(1);
    if (flags & ~3u) throw std::invalid_argument("ACK payload has unknown flag bits");
    p.internet_state = flags & 1u;
    p.drain_request = flags & 2u;
    p.active_cells = static_cast<std::uint8_t>(get(1));
    p.fair_share_bits_per_subframe = static_cast<std::uint32_t>(get(4));
    p.echo_seq = get(8);
    p.echo_send_time_us = static_cast<std::int64_t>(get(8));
    return p;
  }

  friend bool operator==(const AckPayload&, const AckPayload&) = default;
};

}  // namespace pbecc::est
