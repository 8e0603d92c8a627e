#pragma once

#include <algorithm>
#include <stdexcept>
#include <string_view>
#include <utility>
#include <vector>

#include "pbecc/cc/controller.hpp"

namespace pbecc::cc {

struct RateStep {
  Duration at{0};  // relative to flow start
  double rate_bps = 0.0;
};

// Open-loop offered load following a step schedule. Ignores acks and loss.
class CbrSender : public CongestionController {
 public:
  explicit CbrSender(std::vector<RateStep> schedule) : schedule_(std::move(schedule)) {
    if (schedule_.empty()) throw std::invalid_argument("CBR schedule is empty");
    std::sort(schedule_.begin(), schedule_.end(), [](const RateStep& a, const RateStep& b) { return a.at < b.at; });
    for (const RateStep& s : schedule_) {
      if (s.rate_bps < 0) throw std::invalid_argument("CBR rate must be >= 0");
    }
  }

  void on_start(SimTime now) override {
    start_ = now;
    now_ = now;
  }
  void on_ack(const AckEvent& ack) override { now_ = ack.now; }
  void advance(SimTime now) override { now_ = now; }

  double rate_at(SimTime now) const {
    double r = 0.0;
    for (const RateStep& s : schedule_) {
      if (now - start_ >= s.at) r = s.rate_bps;
    }
    return r;
  }

  double pacing_rate_bps() const override { return rate_at(now_); }
  double cwnd_bits() const override { return kNoWindow; }
  std::string_view phase_name() const override { return "CBR"; }
  bool reacts_to_acks() const override { return false; }

 private:
  std::vector<RateStep> schedule_;
  SimTime start_{};
  SimTime now_{};
};

}  // namespace pbecc::cc
