#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "pbecc/cc/controller.hpp"
#include "pbecc/cc/filters.hpp"
#include "pbecc/cc/gain_cycle.hpp"
#include "pbecc/est/feedback.hpp"

namespace pbecc::cc {

enum class PbePhase {
  LinearIncrease,
  WirelessCA,
  PreDrain,
  InternetProbeBW,
  InternetProbeRTT,
  InternetStartUp,
  InternetDrain,
};

inline std::string_view to_string(PbePhase p) {
  switch (p) {
    case PbePhase::LinearIncrease: return "LinearIncrease";
    case PbePhase::WirelessCA: return "WirelessCA";
    case PbePhase::PreDrain: return "PreDrain";
    case PbePhase::InternetProbeBW: return "InternetProbeBW";
    case PbePhase::InternetProbeRTT: return "InternetProbeRTT";
    case PbePhase::InternetStartUp: return "InternetStartUp";
    case PbePhase::InternetDrain: return "InternetDrain";
  }
  return "?";
}

inline bool is_internet(PbePhase p) {
  return p == PbePhase::PreDrain || p == PbePhase::InternetProbeBW || p == PbePhase::InternetProbeRTT ||
         p == PbePhase::InternetStartUp || p == PbePhase::InternetDrain;
}

// Probing-phase rate in Internet mode: the usual 1.25 gain, but never above
// the wireless fair share.
inline double probe_rate(double btlbw, double fair_share) {
  return fair_share > 0 ? std::min(1.25 * btlbw, fair_share) : 1.25 * btlbw;
}

// Rate ramp towards C_f. Starts at (t0, r0) and hits the target at a fixed
// deadline; a new target re-anchors at the current point and keeps the
// deadline.
class LinearRamp {
 public:
  void start(SimTime now, double from_bps, double target_bps, Duration length) {
    anchor_time_ = now;
    anchor_rate_ = from_bps;
    target_ = target_bps;
    deadline_ = now + length;
  }

  void retarget(SimTime now, double target_bps) {
    if (target_bps == target_) return;
    anchor_rate_ = rate(now);
    anchor_time_ = std::min(now, deadline_);
    target_ = target_bps;
  }

  double rate(SimTime now) const {
    if (now >= deadline_) return target_;
    if (now <= anchor_time_) return anchor_rate_;
    const double f = static_cast<double>((now - anchor_time_).count()) /
                     static_cast<double>((deadline_ - anchor_time_).count());
    return anchor_rate_ + (target_ - anchor_rate_) * f;
  }

  bool done(SimTime now) const { return now >= deadline_; }
  SimTime deadline() const { return deadline_; }
  double target() const { return target_; }

 private:
  SimTime anchor_time_{};
  double anchor_rate_ = 0.0;
  double target_ = 0.0;
  SimTime deadline_{};
};

// Receive rate and delay over one RTprop of the start-up ramp.
struct IntervalStats {
  double receive_rate_bps = 0.0;
  double delay_ms = 0.0;
};

struct StartupExitConfig {
  double plateau_growth = 0.05;  // less than 5% up counts as flat
  int rising_intervals = 3;      // delay must rise across this many intervals
  double min_delay_rise_ms = 1.0;
};

// The ramp has hit a bottleneck other than the cell when the receive rate
// stops growing for an RTprop while the delay keeps climbing.
inline bool startup_exit_check(std::span<const IntervalStats> series, const StartupExitConfig& cfg = {}) {
  const std::size_t n = static_cast<std::size_t>(cfg.rising_intervals);
  if (n < 2 || series.size() < n) return false;
  const auto tail = series.subspan(series.size() - n);
  const IntervalStats& prev = tail[n - 2];
  const IntervalStats& last = tail[n - 1];
  if (last.receive_rate_bps > prev.receive_rate_bps * (1.0 + cfg.plateau_growth)) return false;
  for (std::size_t i = 1; i < n; ++i) {
    if (!(tail[i].delay_ms > tail[i - 1].delay_ms)) return false;
  }
  return last.delay_ms - tail[0].delay_ms >= cfg.min_delay_rise_ms;
}

struct PbeConfig {
  double mss_bits = 12000.0;
  double initial_rate_bps = 10 * 12000.0 / 0.1;  // 10 packets per 100 ms
  int ramp_rtprops = 3;
  double predrain_gain = 0.5;
  double startup_gain = 2.885;
  Duration probe_rtt_duration = std::chrono::milliseconds(200);
  Duration rtprop_window = std::chrono::seconds(10);
  int btlbw_window_rtprops = 10;
  int min_cwnd_packets = 4;
  int initial_cwnd_packets = 10;
  double reprobe_gain = 0.5;
  StartupExitConfig startup_exit;
};

class PbeSender : public CongestionController {
 public:
  explicit PbeSender(PbeConfig config = {}) : config_(config), rtprop_(config.rtprop_window) {}

  void on_start(SimTime now) override {
    phase_ = PbePhase::LinearIncrease;
    phase_start_ = now;
    now_ = now;
  }

  void on_ack(const AckEvent& ack) override {
    const SimTime now = ack.now;
    if (rtprop_.update(now, ack.rtt) && phase_ == PbePhase::InternetProbeBW) enter_probe_rtt(now);
    if (ack.delivery_rate_bps > 0 && (!ack.app_limited || ack.delivery_rate_bps > btlbw_.peek())) {
      btlbw_.update(now, ack.delivery_rate_bps, btlbw_window());
    }
    if (ack.round_start) note_round(ack);
    record_interval(ack);

    if (!ack.feedback) {
      advance(now);
      return;
    }
    const est::AckPayload& fb = *ack.feedback;
    cf_bps_ = fb.fair_share_bps();
    feedback_rate_bps_ = fb.interval_us == 0 ? 0.0 : fb.rate_bps();
    const int cells_before = active_cells_;
    active_cells_ = fb.active_cells;

    switch (phase_) {
      case PbePhase::LinearIncrease:
        if (!ramp_started_) {
          ramp_started_ = true;
          ramp_.start(now, 0.0, cf_bps_, config_.ramp_rtprops * rtprop());
          interval_start_ = now;
        }
        if (fb.internet_state || startup_exit_check(intervals_, config_.startup_exit)) {
          enter_internet(now);
        } else {
          ramp_.retarget(now, cf_bps_);
        }
        break;
      case PbePhase::WirelessCA:
        if (fb.internet_state) {
          enter_internet(now);
        } else if (active_cells_ > cells_before) {
          restart_ramp(now);
        } else if (fb.drain_request) {
          drain_until_ = now + rtprop();
        }
        break;
      default:
        if (!fb.internet_state) set_phase(PbePhase::WirelessCA, now);
        break;
    }
    advance(now);
  }

  void advance(SimTime now) override {
    switch (phase_) {
      case PbePhase::LinearIncrease:
        if (ramp_started_ && ramp_.done(now)) set_phase(PbePhase::WirelessCA, now);
        break;
      case PbePhase::PreDrain:
        if (now - phase_start_ >= rtprop()) enter_probe_bw(phase_start_ + rtprop());
        break;
      case PbePhase::InternetProbeBW:
        cycle_.advance(now, rtprop());
        if (rtprop_.expired(now)) enter_probe_rtt(now);
        break;
      case PbePhase::InternetProbeRTT:
        if (now - phase_start_ >= config_.probe_rtt_duration) {
          rtprop_.refresh(now);
          if (btlbw() > 0) {
            enter_probe_bw(now);
          } else {
            set_phase(PbePhase::InternetStartUp, now);
          }
        }
        break;
      case PbePhase::InternetStartUp:
        if (full_pipe_) set_phase(PbePhase::InternetDrain, now);
        break;
      case PbePhase::InternetDrain:
        if (static_cast<double>(inflight_bits_) <= bdp_bits()) enter_probe_bw(now);
        break;
      case PbePhase::WirelessCA:
        break;
    }
    now_ = now;
  }

  double pacing_rate_bps() const override {
    double r = 0.0;
    switch (phase_) {
      case PbePhase::LinearIncrease:
        r = ramp_started_ ? std::max(config_.initial_rate_bps, ramp_.rate(now_)) : config_.initial_rate_bps;
        break;
      case PbePhase::WirelessCA:
        r = feedback_rate_bps_ > 0 ? feedback_rate_bps_ : config_.initial_rate_bps;
        if (now_ < drain_until_) r *= config_.reprobe_gain;
        break;
      case PbePhase::PreDrain:
        r = config_.predrain_gain * btlbw();
        break;
      case PbePhase::InternetProbeBW:
        r = cycle_.index() == 0 ? probe_rate(btlbw(), cf_bps_) : cycle_.gain() * btlbw();
        break;
      case PbePhase::InternetProbeRTT:
        r = btlbw();
        break;
      case PbePhase::InternetStartUp:
        r = config_.startup_gain * std::max(btlbw(), config_.initial_rate_bps);
        break;
      case PbePhase::InternetDrain:
        r = btlbw() / config_.startup_gain;
        break;
    }
    return r > 0 ? r : config_.initial_rate_bps;
  }

  double cwnd_bits() const override {
    const double floor = config_.min_cwnd_packets * config_.mss_bits;
    if (!rtprop_.known()) return config_.initial_cwnd_packets * config_.mss_bits;
    if (phase_ == PbePhase::InternetProbeRTT) return floor;
    return std::max(floor, to_seconds(rtprop()) * pacing_rate_bps());
  }

  std::string_view phase_name() const override { return to_string(phase_); }
  Duration rtprop() const override { return rtprop_.known() ? rtprop_.get() : std::chrono::milliseconds(100); }
  double btlbw_bps() const override { return btlbw_.peek(); }
  double fair_share_bps() const override { return cf_bps_; }
  bool bounds_inflight_to_bdp() const override { return true; }

  PbePhase phase() const { return phase_; }
  SimTime phase_start() const { return phase_start_; }
  std::size_t gain_index() const { return cycle_.index(); }
  const LinearRamp& ramp() const { return ramp_; }
  bool ramp_started() const { return ramp_started_; }
  bool draining(SimTime now) const { return phase_ == PbePhase::WirelessCA && now < drain_until_; }
  double feedback_rate_bps() const { return feedback_rate_bps_; }

 private:
  static double to_seconds(Duration d) { return static_cast<double>(d.count()) / 1e6; }

  Duration btlbw_window() const { return config_.btlbw_window_rtprops * rtprop(); }
  double btlbw() const { return btlbw_.peek(); }
  double bdp_bits() const { return to_seconds(rtprop()) * btlbw(); }

  void set_phase(PbePhase p, SimTime now) {
    phase_ = p;
    phase_start_ = now;
    if (p == PbePhase::InternetStartUp) {
      full_pipe_ = false;
      full_bw_ = 0.0;
      full_bw_rounds_ = 0;
    }
  }

  void enter_internet(SimTime now) {
    drain_until_ = SimTime{};
    set_phase(btlbw() > 0 ? PbePhase::PreDrain : PbePhase::InternetStartUp, now);
  }

  void enter_probe_bw(SimTime now) {
    set_phase(PbePhase::InternetProbeBW, now);
    cycle_.start(now, 0);
  }

  void enter_probe_rtt(SimTime now) { set_phase(PbePhase::InternetProbeRTT, now); }

  void restart_ramp(SimTime now) {
    const double from = pacing_rate_bps();
    set_phase(PbePhase::LinearIncrease, now);
    ramp_started_ = true;
    ramp_.start(now, from, cf_bps_, config_.ramp_rtprops * rtprop());
    intervals_.clear();
    interval_start_ = now;
    interval_bits_ = 0;
    interval_rtt_sum_ms_ = 0.0;
    interval_acks_ = 0;
  }

  void note_round(const AckEvent& ack) {
    inflight_bits_ = ack.inflight_bits;
    if (phase_ != PbePhase::InternetStartUp || full_pipe_ || ack.app_limited) return;
    const double bw = btlbw();
    if (bw >= full_bw_ * 1.25) {
      full_bw_ = bw;
      full_bw_rounds_ = 0;
    } else if (++full_bw_rounds_ >= 3) {
      full_pipe_ = true;
    }
  }

  void record_interval(const AckEvent& ack) {
    inflight_bits_ = ack.inflight_bits;
    if (phase_ != PbePhase::LinearIncrease || !ramp_started_) return;
    interval_bits_ += ack.acked_bits;
    interval_rtt_sum_ms_ += to_ms(ack.rtt);
    ++interval_acks_;
    const Duration len = rtprop();
    if (ack.now - interval_start_ < len) return;
    IntervalStats s;
    s.receive_rate_bps = static_cast<double>(interval_bits_) / to_seconds(ack.now - interval_start_);
    s.delay_ms = interval_rtt_sum_ms_ / interval_acks_;
    intervals_.push_back(s);
    if (intervals_.size() > 8) intervals_.erase(intervals_.begin());
    interval_start_ = ack.now;
    interval_bits_ = 0;
    interval_rtt_sum_ms_ = 0.0;
    interval_acks_ = 0;
  }

  PbeConfig config_;
  PbePhase phase_ = PbePhase::LinearIncrease;
  SimTime phase_start_{};
  SimTime now_{};

  MinRttFilter rtprop_;
  WindowedMax btlbw_;
  GainCycle cycle_;
  LinearRamp ramp_;
  bool ramp_started_ = false;

  double cf_bps_ = 0.0;
  double feedback_rate_bps_ = 0.0;
  int active_cells_ = 1;
  SimTime drain_until_{};
  std::int64_t inflight_bits_ = 0;

  bool full_pipe_ = false;
  double full_bw_ = 0.0;
  int full_bw_rounds_ = 0;

  std::vector<IntervalStats> intervals_;
  SimTime interval_start_{};
  std::int64_t interval_bits_ = 0;
  double interval_rtt_sum_ms_ = 0.0;
  int interval_acks_ = 0;
};

}  // namespace pbecc::cc
