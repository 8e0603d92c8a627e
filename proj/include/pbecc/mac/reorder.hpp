#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <optional>
#include <stdexcept>
#include <vector>

namespace pbecc::mac {

// Client-side reordering for one (cell, user) pair. Transport blocks are held
// until every earlier-subframe block of the same pair has been resolved, then
// released together in subframe order.
class ReorderBuffer {
 public:
  enum class State { Pending, Delivered, Dropped };

  struct Released {
    std::uint64_t tb_id = 0;
    std::int64_t subframe = 0;          // original transmission
    std::int64_t release_subframe = 0;
    bool delivered = true;               // false: HARQ gave up, payload lost

    int delay_ms() const { return static_cast<int>(release_subframe - subframe); }
  };

  // Blocks must be added in non-decreasing subframe order.
  void add(std::int64_t subframe, std::uint64_t tb_id, State state) {
    if (!held_.empty() && subframe < held_.back().subframe) {
      throw std::logic_error("reorder buffer: transport blocks must arrive in subframe order");
    }
    held_.push_back(Entry{subframe, tb_id, state});
  }

  void resolve(std::uint64_t tb_id, bool delivered) {
    auto it = std::find_if(held_.begin(), held_.end(),
                           [&](const Entry& e) { return e.tb_id == tb_id; });
    if (it == held_.end() || it->state != State::Pending) {
      throw std::logic_error("reorder buffer: resolving unknown or settled transport block");
    }
    it->state = delivered ? State::Delivered : State::Dropped;
  }

  // Releases the resolved prefix at the end of subframe `now`.
  std::vector<Released> release(std::int64_t now) {
    std::vector<Released> out;
    while (!held_.empty() && held_.front().state != State::Pending) {
      const Entry& e = held_.front();
      out.push_back(Released{e.tb_id, e.subframe, now, e.state == State::Delivered});
      held_.pop_front();
    }
    return out;
  }

  // Earliest transport block still waiting on HARQ.
  std::optional<std::int64_t> blocking_subframe() const {
    for (const Entry& e : held_) {
      if (e.state == State::Pending) return e.subframe;
    }
    return std::nullopt;
  }

  std::size_t held() const { return held_.size(); }

 private:
  struct Entry {
    std::int64_t subframe;
    std::uint64_t tb_id;
    State state;
  };
  std::deque<Entry> held_;
};

}  // namespace pbecc::mac
