#pragma once

#include <cstdint>
#include <vector>

#include "pbecc/mac/tb_error.hpp"
#include "pbecc/mac/types.hpp"

namespace pbecc::mac {

inline constexpr int kHarqRoundTripSubframes = 8;
inline constexpr int kMaxRetransmissions = 3;

// Tracks one erroneous transport block through its retransmissions. Every
// attempt happens exactly eight subframes after the one before it.
struct HarqProcess {
  enum class Status { Pending, Delivered, Dropped };

  std::uint64_t tb_id = 0;
  CellId cell = 0;
  UserId user = 0;
  std::int64_t original_subframe = 0;
  int prbs = 0;
  double rw_bits_per_prb = 0.0;
  std::vector<TbOutcome> outcomes;  // original transmission first

  int retransmissions() const { return outcomes.empty() ? 0 : static_cast<int>(outcomes.size()) - 1; }

  std::int64_t next_attempt_subframe() const {
    return original_subframe + kHarqRoundTripSubframes * static_cast<std::int64_t>(outcomes.size());
  }

  Status record(TbOutcome outcome) {
    outcomes.push_back(outcome);
    if (outcome == TbOutcome::Ok) return Status::Delivered;
    if (retransmissions() >= kMaxRetransmissions) return Status::Dropped;
    return Status::Pending;
  }
};

}  // namespace pbecc::mac
