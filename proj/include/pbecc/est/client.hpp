#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "pbecc/ctrl/observer.hpp"
#include "pbecc/est/bottleneck.hpp"
#include "pbecc/est/capacity.hpp"
#include "pbecc/est/delay_tracker.hpp"
#include "pbecc/est/feedback.hpp"
#include "pbecc/est/translate.hpp"
#include "pbecc/mac/types.hpp"
#include "pbecc/sim/packet.hpp"

namespace pbecc::est {

struct ClientConfig {
  double overhead = kProtocolOverhead;
  double mss_bits = 12000.0;
  ctrl::ActivityThresholds thresholds;
  DelayTrackerConfig delay;
  // The sender counts as back at the fair share once its echoed rate is
  // within this fraction of C_f.
  double rate_reached_fraction = 0.97;
  int default_window_subframes = 40;
};

struct CapacityEstimate {
  std::vector<ctrl::WindowedParams> cells;  // active cells only
  double cp = 0.0;            // physical capacity, bits/subframe
  double cf = 0.0;            // physical fair share
  double ct = 0.0;            // transport capacity
  double cf_transport = 0.0;  // transport fair share

  // Rate fed back to the sender. Never below the fair share: when every PRB
  // is taken the idle term vanishes and the own allocation alone would
  // underestimate what the scheduler will hand out.
  double feedback_rate() const { return std::max(ct, cf_transport); }
};

struct CellRef {
  mac::CellId id = 0;
  int prbs = 0;
};

// Mobile-side estimator. Decodes the allocations of the cells it aggregates,
// keeps per-cell window averages, and answers every delivered packet with an
// ACK carrying the capacity estimate and bottleneck state.
class PbeClient {
 public:
  PbeClient(mac::UserId self, std::vector<CellRef> cells, double ber, ClientConfig config = {})
      : self_(self), config_(config), table_(ber, config.overhead), delay_(config.delay) {
    if (cells.empty()) throw std::invalid_argument("client needs at least one cell");
    for (const CellRef& c : cells) {
      observers_.emplace_back(c.id, self, c.prbs, config_.default_window_subframes, config_.thresholds);
    }
  }

  mac::UserId user() const { return self_; }

  void set_ber(double ber) {
    if (ber != table_.ber()) table_ = TranslationTable(ber, config_.overhead);
  }

  // Feeds one subframe of decoded allocations. `own_rate` gives this user's
  // R_w per cell for subframes in which it holds no grant.
  void on_subframe(std::span<const mac::SubframeAllocation> allocations,
                   std::span<const mac::CellId> active_cells,
                   const std::function<double(mac::CellId)>& own_rate) {
    for (const mac::SubframeAllocation& a : allocations) {
      for (ctrl::CellObserver& o : observers_) {
        if (o.cell() == a.cell) o.observe(a, own_rate(a.cell));
      }
    }
    active_.assign(active_cells.begin(), active_cells.end());
    recompute();
  }

  AckPayload on_packet(const Packet& pkt, SimTime delivered_at) {
    if (pkt.sender_rtprop > Duration::zero()) {
      const int window = static_cast<int>(std::ceil(to_ms(pkt.sender_rtprop)));
      for (ctrl::CellObserver& o : observers_) o.set_window(window);
    }
    delay_.add_sample(delivered_at, to_ms(delivered_at - pkt.sent_at));

    n_pkt_ = consecutive_threshold(estimate_.ct, config_.mss_bits);
    TransitionInput in;
    in.over_count = delay_.over_count();
    in.under_count = delay_.under_count();
    in.n_pkt = n_pkt_;
    in.rate_reached_fair_share =
        pkt.sender_rate_bps >= config_.rate_reached_fraction * estimate_.cf_transport * 1000.0;
    const BottleneckState next = state_transition(state_, in);
    if (next != state_) {
      state_ = next;
      delay_.reset_counters();
      ++transitions_;
    }

    AckPayload ack;
    ack.interval_us = interval_from_rate(estimate_.feedback_rate());
    ack.internet_state = state_ == BottleneckState::Internet;
    ack.drain_request = state_ == BottleneckState::Wireless && delay_.take_reprobe(delivered_at);
    ack.active_cells = static_cast<std::uint8_t>(std::clamp<std::size_t>(active_.size(), 1, 255));
    ack.fair_share_bits_per_subframe =
        static_cast<std::uint32_t>(std::clamp(std::round(estimate_.cf_transport), 0.0, 4294967295.0));
    ack.echo_seq = pkt.seq;
    ack.echo_send_time_us = micros(pkt.sent_at);
    return ack;
  }

  const CapacityEstimate& estimate() const { return estimate_; }
  BottleneckState state() const { return state_; }
  const DelayTracker& delay() const { return delay_; }
  int n_pkt() const { return n_pkt_; }
  int transitions() const { return transitions_; }
  int window_subframes() const { return observers_.front().window(); }

 private:
  void recompute() {
    CapacityEstimate e;
    std::vector<CapacityInput> cap;
    std::vector<FairShareInput> fair;
    for (const ctrl::CellObserver& o : observers_) {
      if (std::find(active_.begin(), active_.end(), o.cell()) == active_.end()) continue;
      ctrl::WindowedParams p = o.params();
      if (p.subframes == 0) continue;
      cap.push_back(CapacityInput{p.rw_bits_per_prb, p.own_prbs, p.idle_prbs, p.users});
      fair.push_back(FairShareInput{p.rw_bits_per_prb, p.cell_prbs, p.users});
      e.cells.push_back(p);
    }
    e.cp = estimate_capacity(cap);
    e.cf = fair_share_rate(fair);
    e.ct = table_(e.cp);
    e.cf_transport = table_(e.cf);
    estimate_ = std::move(e);
  }

  mac::UserId self_;
  ClientConfig config_;
  TranslationTable table_;
  DelayTracker delay_;
  std::vector<ctrl::CellObserver> observers_;
  std::vector<mac::CellId> active_;
  CapacityEstimate estimate_;
  BottleneckState state_ = BottleneckState::Wireless;
  int n_pkt_ = 1;
  int transitions_ = 0;
};

}  // namespace pbecc::est
