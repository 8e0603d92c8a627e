#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <optional>
#include <stdexcept>

#include "pbecc/sim/packet.hpp"
#include "pbecc/sim/time.hpp"

namespace pbecc::sim {

struct WiredLinkConfig {
  double rate_bps = 1e9;  // <= 0 means no serialization delay
  Duration propagation{0};
  std::int64_t queue_capacity_bits = 8'000'000;
};

// Store-and-forward FIFO with tail drop. Packets leave at
//   max(arrival, previous departure) + size/rate + propagation.
// Occupancy counts every packet that has not finished serialization.
class WiredLink {
 public:
  explicit WiredLink(WiredLinkConfig config) : config_(config) {
    if (config_.queue_capacity_bits <= 0) {
      throw std::invalid_argument("wired link queue capacity must be positive");
    }
  }

  const WiredLinkConfig& config() const { return config_; }

  // Returns the delivery time at the far end, or nullopt on tail drop.
  std::optional<SimTime> transit(const Packet& pkt, SimTime arrival) {
    if (pkt.size_bits <= 0) throw std::invalid_argument("packet size must be positive");
    expire(arrival);
    if (occupancy_bits_ + pkt.size_bits > config_.queue_capacity_bits) {
      ++drops_;
      return std::nullopt;
    }
    SimTime start = std::max(arrival, busy_until_);
    SimTime done = start + serialization(pkt.size_bits);
    busy_until_ = done;
    in_queue_.push_back({done, pkt.size_bits});
    occupancy_bits_ += pkt.size_bits;
    max_occupancy_bits_ = std::max(max_occupancy_bits_, occupancy_bits_);
    return done + config_.propagation;
  }

  Duration serialization(std::int64_t bits) const {
    if (config_.rate_bps <= 0) return Duration{0};
    return Duration{static_cast<std::int64_t>(
        std::llround(static_cast<double>(bits) * 1e6 / config_.rate_bps))};
  }

  std::int64_t occupancy_bits(SimTime t) {
    expire(t);
    return occupancy_bits_;
  }

  std::uint64_t drops() const { return drops_; }
  std::int64_t max_occupancy_bits() const { return max_occupancy_bits_; }
  // Restart the high-water mark, e.g. at the end of a warm-up period.
  void reset_max_occupancy() { max_occupancy_bits_ = occupancy_bits_; }

 private:
  struct Queued {
    SimTime done;
    std::int64_t bits;
  };

  void expire(SimTime t) {
    while (!in_queue_.empty() && in_queue_.front().done <= t) {
      occupancy_bits_ -= in_queue_.front().bits;
      in_queue_.pop_front();
    }
  }

  WiredLinkConfig config_;
  SimTime busy_until_{};
  std::deque<Queued> in_queue_;
  std::int64_t occupancy_bits_ = 0;
  std::int64_t max_occupancy_bits_ = 0;
  std::uint64_t drops_ = 0;
};

}  // namespace pbecc::sim
