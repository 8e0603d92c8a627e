#pragma once

#include <algorithm>
#include <cstdint>
#include <string_view>

#include "pbecc/cc/controller.hpp"
#include "pbecc/cc/filters.hpp"
#include "pbecc/cc/gain_cycle.hpp"

namespace pbecc::cc {

enum class BbrPhase { StartUp, Drain, ProbeBW, ProbeRTT };

inline std::string_view to_string(BbrPhase p) {
  switch (p) {
    case BbrPhase::StartUp: return "StartUp";
    case BbrPhase::Drain: return "Drain";
    case BbrPhase::ProbeBW: return "ProbeBW";
    case BbrPhase::ProbeRTT: return "ProbeRTT";
  }
  return "?";
}

struct BbrConfig {
  double mss_bits = 12000.0;
  double initial_rate_bps = 10 * 12000.0 / 0.1;
  double high_gain = 2.885;
  double cwnd_gain = 2.0;
  Duration probe_rtt_duration = std::chrono::milliseconds(200);
  Duration rtprop_window = std::chrono::seconds(10);
  int btlbw_window_rtprops = 10;
  int min_cwnd_packets = 4;
  int initial_cwnd_packets = 10;
};

// Model-based baseline in the usual shape: exponential start-up until the
// bandwidth estimate stops growing, drain, then the eight-phase gain cycle
// with periodic RTT probing.
class BbrSender : public CongestionController {
 public:
  explicit BbrSender(BbrConfig config = {}) : config_(config), rtprop_(config.rtprop_window) {}

  void on_start(SimTime now) override {
    phase_ = BbrPhase::StartUp;
    phase_start_ = now;
    now_ = now;
  }

  void on_ack(const AckEvent& ack) override {
    const SimTime now = ack.now;
    inflight_bits_ = ack.inflight_bits;
    const bool stale = rtprop_.update(now, ack.rtt);
    if (ack.delivery_rate_bps > 0 && (!ack.app_limited || ack.delivery_rate_bps > btlbw_.peek())) {
      btlbw_.update(now, ack.delivery_rate_bps, config_.btlbw_window_rtprops * rtprop());
    }
    if (ack.round_start && phase_ == BbrPhase::StartUp && !full_pipe_ && !ack.app_limited) {
      const double bw = btlbw_.peek();
      if (bw >= full_bw_ * 1.25) {
        full_bw_ = bw;
        full_bw_rounds_ = 0;
      } else if (++full_bw_rounds_ >= 3) {
        full_pipe_ = true;
      }
    }
    if (stale && phase_ != BbrPhase::ProbeRTT) set_phase(BbrPhase::ProbeRTT, now);
    advance(now);
  }

  void advance(SimTime now) override {
    now_ = now;
    switch (phase_) {
      case BbrPhase::StartUp:
        if (full_pipe_) set_phase(BbrPhase::Drain, now);
        break;
      case BbrPhase::Drain:
        if (static_cast<double>(inflight_bits_) <= bdp_bits()) enter_probe_bw(now);
        break;
      case BbrPhase::ProbeBW:
        cycle_.advance(now, rtprop());
        if (rtprop_.expired(now)) set_phase(BbrPhase::ProbeRTT, now);
        break;
      case BbrPhase::ProbeRTT:
        if (now - phase_start_ >= config_.probe_rtt_duration) {
          rtprop_.refresh(now);
          if (full_pipe_) {
            enter_probe_bw(now);
          } else {
            set_phase(BbrPhase::StartUp, now);
          }
        }
        break;
    }
  }

  double pacing_rate_bps() const override {
    const double bw = btlbw_.peek();
    double r = 0.0;
    switch (phase_) {
      case BbrPhase::StartUp: r = config_.high_gain * std::max(bw, config_.initial_rate_bps / config_.high_gain); break;
      case BbrPhase::Drain: r = bw / config_.high_gain; break;
      case BbrPhase::ProbeBW: r = cycle_.gain() * bw; break;
      case BbrPhase::ProbeRTT: r = bw; break;
    }
    return r > 0 ? r : config_.initial_rate_bps;
  }

  double cwnd_bits() const override {
    const double floor = config_.min_cwnd_packets * config_.mss_bits;
    if (phase_ == BbrPhase::ProbeRTT) return floor;
    if (!rtprop_.known() || btlbw_.peek() <= 0) return config_.initial_cwnd_packets * config_.mss_bits;
    const double gain = phase_ == BbrPhase::StartUp ? config_.high_gain : config_.cwnd_gain;
    return std::max(floor, gain * bdp_bits());
  }

  std::string_view phase_name() const override { return to_string(phase_); }
  Duration rtprop() const override { return rtprop_.known() ? rtprop_.get() : std::chrono::milliseconds(100); }
  double btlbw_bps() const override { return btlbw_.peek(); }

  BbrPhase phase() const { return phase_; }
  std::size_t gain_index() const { return cycle_.index(); }

 private:
  double bdp_bits() const { return static_cast<double>(rtprop().count()) / 1e6 * btlbw_.peek(); }

  void set_phase(BbrPhase p, SimTime now) {
    phase_ = p;
    phase_start_ = now;
  }

  void enter_probe_bw(SimTime now) {
    set_phase(BbrPhase::ProbeBW, now);
    cycle_.start(now, 0);
  }

  BbrConfig config_;
  BbrPhase phase_ = BbrPhase::StartUp;
  SimTime phase_start_{};
  SimTime now_{};
  MinRttFilter rtprop_;
  WindowedMax btlbw_;
  GainCycle cycle_;
  std::int64_t inflight_bits_ = 0;
  bool full_pipe_ = false;
  double full_bw_ = 0.0;
  int full_bw_rounds_ = 0;
};

}  // namespace pbecc::cc
