#pragma once

#include <cstdint>
#include <functional>
#include <queue>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "pbecc/sim/time.hpp"

namespace pbecc::sim {

class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Min-heap of (time, insertion sequence). Equal-time events pop in the order
// they were pushed, which keeps runs reproducible.
class EventQueue {
 public:
  using Callback = std::function<void()>;

  void push(SimTime at, Callback cb) {
    heap_.push(Entry{at, next_seq_++, std::move(cb)});
  }

  bool empty() const { return heap_.empty(); }
  std::size_t size() const { return heap_.size(); }
  SimTime next_time() const { return heap_.top().at; }

  std::pair<SimTime, Callback> pop() {
    Entry e = std::move(const_cast<Entry&>(heap_.top()));
    heap_.pop();
    return {e.at, std::move(e.cb)};
  }

 private:
  struct Entry {
    SimTime at;
    std::uint64_t seq;
    Callback cb;
  };
  struct Later {
    bool operator()(const Entry& a, const Entry& b) const {
      if (a.at != b.at) return a.at > b.at;
      return a.seq > b.seq;
    }
  };

  std::priority_queue<Entry, std::vector<Entry>, Later> heap_;
  std::uint64_t next_seq_ = 0;
};

// Single-threaded event loop. One instance per simulation run.
class Simulator {
 public:
  using Callback = EventQueue::Callback;

  SimTime now() const { return now_; }

  void schedule(SimTime at, Callback cb) {
    if (at < now_) {
      throw ContractViolation("event scheduled in the past: t=" +
                              std::to_string(micros(at)) + "us, now=" +
                              std::to_string(micros(now_)) + "us");
    }
    queue_.push(at, std::move(cb));
  }

  void schedule_in(Duration delay, Callback cb) { schedule(now_ + delay, std::move(cb)); }

  // Processes every event with time <= end. Returns the number of events run.
  // The clock is left at `end` unless the queue ran dry earlier.
  std::uint64_t run_until(SimTime end) {
    std::uint64_t processed = 0;
    while (!queue_.empty() && queue_.next_time() <= end) {
      auto [at, cb] = queue_.pop();
      now_ = at;
      cb();
      ++processed;
    }
    if (!queue_.empty()) now_ = end;
    return processed;
  }

  std::size_t pending() const { return queue_.size(); }

 private:
  EventQueue queue_;
  SimTime now_ = kSimStart;
};

}  // namespace pbecc::sim
