#pragma once

#include <deque>
#include <limits>
#include <optional>

#include "pbecc/sim/time.hpp"

namespace pbecc::est {

struct DelayTrackerConfig {
  Duration window = std::chrono::seconds(10);
  int max_retransmissions = 3;
  double harq_round_ms = 8.0;
  double jitter_ms = 3.0;
  // Samples spread over less than this for a whole window count as flat.
  double flatness_ms = 1.0;
};

// One-way delay bookkeeping on the client. D_prop is the minimum sample over
// the trailing window; the switching threshold sits three HARQ rounds plus a
// jitter allowance above it. Only relative delays matter, so sender and
// client clocks need not agree.
class DelayTracker {
 public:
  explicit DelayTracker(DelayTrackerConfig config = {}) : config_(config) {}

  void add_sample(SimTime at, double owd_ms) {
    if (!first_sample_) first_sample_ = at;
    while (!mins_.empty() && mins_.back().value >= owd_ms) mins_.pop_back();
    mins_.push_back({at, owd_ms});
    while (!maxs_.empty() && maxs_.back().value <= owd_ms) maxs_.pop_back();
    maxs_.push_back({at, owd_ms});
    expire(at);

    const double th = threshold_ms();
    over_ = owd_ms > th ? over_ + 1 : 0;
    under_ = owd_ms < th ? under_ + 1 : 0;
    last_ = at;
  }

  bool has_estimate() const { return !mins_.empty(); }

  double propagation_ms() const {
    return mins_.empty() ? std::numeric_limits<double>::infinity() : mins_.front().value;
  }

  double threshold_margin_ms() const {
    return config_.max_retransmissions * config_.harq_round_ms + config_.jitter_ms;
  }

  double threshold_ms() const { return propagation_ms() + threshold_margin_ms(); }

  int over_count() const { return over_; }
  int under_count() const { return under_; }

  void reset_counters() { over_ = under_ = 0; }

  // True once the delay has stayed flat for a full window, i.e. the minimum
  // may be a standing queue rather than the propagation delay. Fires at most
  // once per window.
  bool take_reprobe(SimTime now) {
    if (!first_sample_ || mins_.empty()) return false;
    const SimTime since = last_reprobe_ ? std::max(*first_sample_, *last_reprobe_) : *first_sample_;
    if (now - since < config_.window) return false;
    if (maxs_.front().value - mins_.front().value > config_.flatness_ms) return false;
    last_reprobe_ = now;
    return true;
  }

 private:
  struct Sample {
    SimTime at;
    double value;
  };

  void expire(SimTime now) {
    while (mins_.size() > 1 && now - mins_.front().at > config_.window) mins_.pop_front();
    while (maxs_.size() > 1 && now - maxs_.front().at > config_.window) maxs_.pop_front();
  }

  DelayTrackerConfig config_;
  std::deque<Sample> mins_;
  std::deque<Sample> maxs_;
  int over_ = 0;
  int under_ = 0;
  std::optional<SimTime> first_sample_;
  std::optional<SimTime> last_reprobe_;
  SimTime last_{};
};

}  // namespace pbecc::est
