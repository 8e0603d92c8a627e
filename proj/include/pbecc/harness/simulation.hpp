#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "pbecc/cc/aimd_sender.hpp"
#include "pbecc/cc/bbr_sender.hpp"
#include "pbecc/cc/cbr_sender.hpp"
#include "pbecc/cc/controller.hpp"
#include "pbecc/cc/pbe_sender.hpp"
#include "pbecc/cc/rate_sampler.hpp"
#include "pbecc/est/client.hpp"
#include "pbecc/harness/scenario.hpp"
#include "pbecc/mac/base_station.hpp"
#include "pbecc/sim/event_queue.hpp"
#include "pbecc/sim/packet.hpp"
#include "pbecc/sim/wired_link.hpp"

namespace pbecc::harness {

struct SenderSample {
  std::int64_t time_us = 0;
  std::string phase;
  double pacing_rate_bps = 0.0;
  double cwnd_bits = 0.0;
  double btlbw_bps = 0.0;
  double rtprop_ms = 0.0;
  double cf_bps = 0.0;
};

struct AllocationRow {
  std::int64_t subframe = 0;
  std::uint32_t cell = 0;
  std::optional<std::uint32_t> user;  // empty for a subframe without grants
  int prbs = 0;
  double rw_bits_per_prb = 0.0;
  bool ndi = false;
  int idle_prbs = 0;
};

struct CaEventRow {
  std::int64_t subframe = 0;
  std::uint32_t user = 0;
  std::uint32_t cell = 0;
  bool activated = false;
};

// Client-side estimate per subframe, PBE flows only.
struct EstimateSample {
  double cp = 0.0;
  double cf = 0.0;
  double ct = 0.0;
  double cf_transport = 0.0;
  bool internet = false;
};

struct FlowResult {
  FlowSpec spec;
  std::int64_t stop_ms = 0;
  std::vector<PacketRecord> packets;  // indexed by seq
  std::vector<SenderSample> sender;
  std::vector<std::int64_t> backlog_bits;    // per subframe
  std::vector<std::int64_t> wired_queue_bits;  // per subframe
  std::vector<EstimateSample> estimates;     // per subframe, PBE only
  std::uint64_t bdp_checks = 0;
  std::uint64_t bdp_violations = 0;
  std::uint64_t losses_detected = 0;
  std::int64_t wired_max_queue_bits = 0;     // after warm-up
};

struct SimulationResult {
  Scenario scenario;
  std::uint64_t seed = 0;
  std::vector<FlowResult> flows;
  std::vector<AllocationRow> allocations;
  std::vector<CaEventRow> ca_events;
  std::uint64_t events = 0;
};

namespace detail {

inline Duration ms(double v) { return Duration{static_cast<std::int64_t>(std::llround(v * 1000.0))}; }

inline std::unique_ptr<cc::CongestionController> make_controller(const FlowSpec& f) {
  switch (f.algorithm) {
    case Algorithm::Pbe: return std::make_unique<cc::PbeSender>();
    case Algorithm::Bbr: return std::make_unique<cc::BbrSender>();
    case Algorithm::Aimd: return std::make_unique<cc::AimdSender>();
    case Algorithm::Cbr: {
      std::vector<cc::RateStep> steps;
      for (const TimedValue& tv : f.cbr_mbps) {
        steps.push_back(cc::RateStep{std::chrono::milliseconds(tv.at_ms), tv.value * 1e6});
      }
      return std::make_unique<cc::CbrSender>(std::move(steps));
    }
  }
  throw std::logic_error("unknown algorithm");
}

}  // namespace detail

// One end-to-end run: senders push packets over their wired paths into the
// base station; the client decodes every subframe, acks each delivered
// packet, and acks travel back over the uplink delay.
class Simulation {
 public:
  explicit Simulation(Scenario scenario, std::optional<std::uint64_t> seed = {})
      : scenario_(std::move(scenario)), seed_(seed.value_or(scenario_.seed)) {
    std::vector<mac::CellConfig> cells;
    for (const CellSpec& c : scenario_.cells) {
      cells.push_back(mac::CellConfig{c.id, c.prbs, c.rw_bits_per_prb, c.ber});
    }
    mac::BaseStationConfig bs_config;
    bs_config.user_buffer_bits = static_cast<std::int64_t>(std::llround(scenario_.user_buffer_kb * 8000.0));
    bs_config.header_overhead = scenario_.header_overhead;
    bs_config.ca.activation_share = scenario_.ca.activate_share;
    bs_config.ca.activation_window = scenario_.ca.activate_window_ms;
    bs_config.ca.deactivation_ratio = scenario_.ca.deactivate_ratio;
    bs_config.ca.deactivation_window = scenario_.ca.deactivate_window_ms;
    bs_ = std::make_unique<mac::BaseStation>(std::move(cells), bs_config, seed_);

    for (const FlowSpec& spec : scenario_.flows) {
      auto flow = std::make_unique<Flow>();
      flow->spec = spec;
      flow->result.spec = spec;
      flow->result.stop_ms = scenario_.stop_of(spec);
      flow->cc = detail::make_controller(spec);
      sim::WiredLinkConfig wl;
      wl.rate_bps = spec.wired.rate_mbps * 1e6;
      wl.propagation = detail::ms(spec.wired.one_way_delay_ms);
      wl.queue_capacity_bits = spec.wired.queue_kb > 0 ? static_cast<std::int64_t>(spec.wired.queue_kb * 8000.0)
                                                       : std::int64_t{1} << 50;
      flow->link = std::make_unique<sim::WiredLink>(wl);
      bs_->add_user(spec.id, {spec.cells.begin(), spec.cells.end()}, spec.ber);
      if (spec.algorithm == Algorithm::Pbe) {
        std::vector<est::CellRef> refs;
        for (std::uint32_t c : spec.cells) refs.push_back(est::CellRef{c, bs_->cell(c).prbs});
        flow->client.emplace(spec.id, std::move(refs), bs_->ber(spec.id));
      }
      flow->result.backlog_bits.reserve(static_cast<std::size_t>(scenario_.duration_ms));
      flow->result.wired_queue_bits.reserve(static_cast<std::size_t>(scenario_.duration_ms));
      flows_.push_back(std::move(flow));
    }
    for (const BackgroundSpec& b : scenario_.background) {
      for (int k = 0; k < b.count; ++k) {
        mac::BackgroundProfile p;
        p.cell = b.cell;
        p.user = b.user;
        p.start_subframe = b.start_ms + k * b.repeat_every_ms;
        p.active_subframes = static_cast<int>(b.duration_ms);
        p.prbs = b.prbs;
        bs_->add_background(p);
      }
    }
    for (const ForcedFailureSpec& f : scenario_.forced_failures) {
      bs_->force_failure(mac::ForcedFailure{f.cell, f.flow, f.subframe, f.failures});
    }
  }

  SimulationResult run() {
    schedule_timelines();
    for (auto& f : flows_) {
      Flow* flow = f.get();
      sim_.schedule(at_ms(flow->spec.start_ms), [this, flow] {
        flow->started = true;
        flow->cc->on_start(sim_.now());
        flow->next_send_us = static_cast<double>(micros(sim_.now()));
        trace(*flow, true);
        try_send(*flow);
      });
    }
    if (scenario_.warmup_ms > 0) {
      sim_.schedule(at_ms(scenario_.warmup_ms), [this] {
        for (auto& f : flows_) f->link->reset_max_occupancy();
      });
    }
    sim_.schedule(at_ms(0), [this] { tick(0); });
    result_.events = sim_.run_until(at_ms(scenario_.duration_ms) - Duration{1});

    result_.scenario = scenario_;
    result_.seed = seed_;
    for (auto& f : flows_) {
      f->result.wired_max_queue_bits = f->link->max_occupancy_bits();
      result_.flows.push_back(std::move(f->result));
    }
    return std::move(result_);
  }

 private:
  struct Outstanding {
    SimTime sent;
    std::int64_t bits;
    cc::SendState state;
  };

  struct Flow {
    FlowSpec spec;
    std::unique_ptr<cc::CongestionController> cc;
    std::unique_ptr<sim::WiredLink> link;
    std::optional<est::PbeClient> client;
    cc::RateSampler sampler;
    std::map<std::uint64_t, Outstanding> outstanding;
    std::int64_t inflight_bits = 0;
    std::uint64_t next_seq = 0;
    double next_send_us = 0.0;
    std::uint64_t wake_generation = 0;
    bool started = false;
    std::int64_t next_round_delivered = 0;
    Duration srtt{0};
    Duration rttvar{0};
    Duration min_rtt{0};
    SimTime latest_acked_sent{};
    std::string last_phase;
    SimTime last_trace{};
    FlowResult result;
  };

  static SimTime at_ms(std::int64_t v) { return kSimStart + std::chrono::milliseconds(v); }

  Flow& flow_of(std::uint32_t id) {
    for (auto& f : flows_) {
      if (f->spec.id == id) return *f;
    }
    throw std::logic_error("unknown flow");
  }

  void schedule_timelines() {
    for (const CellSpec& c : scenario_.cells) {
      for (const TimedValue& tv : c.rw_timeline) {
        const std::uint32_t id = c.id;
        const double v = tv.value;
        sim_.schedule(at_ms(tv.at_ms), [this, id, v] { bs_->set_rate(id, std::nullopt, v); });
      }
    }
    for (auto& f : flows_) {
      Flow* flow = f.get();
      for (const auto& [cell, points] : flow->spec.rw_timelines) {
        for (const TimedValue& tv : points) {
          const std::uint32_t c = cell;
          const double v = tv.value;
          sim_.schedule(at_ms(tv.at_ms), [this, flow, c, v] { bs_->set_rate(c, flow->spec.id, v); });
        }
      }
      for (const TimedValue& tv : flow->spec.ber_timeline) {
        const double v = tv.value;
        sim_.schedule(at_ms(tv.at_ms), [this, flow, v] {
          bs_->set_ber(flow->spec.id, v);
          if (flow->client) flow->client->set_ber(v);
        });
      }
    }
  }

  bool sending(const Flow& f) const {
    return f.started && sim_.now() < at_ms(f.result.stop_ms);
  }

  void wake(Flow& f, SimTime at) {
    const std::uint64_t gen = ++f.wake_generation;
    Flow* flow = &f;
    sim_.schedule(std::max(at, sim_.now()), [this, flow, gen] {
      if (flow->wake_generation == gen) try_send(*flow);
    });
  }

  void try_send(Flow& f) {
    if (!sending(f)) return;
    const SimTime now = sim_.now();
    f.cc->advance(now);
    trace(f, false);
    for (;;) {
      const double rate = f.cc->pacing_rate_bps();
      if (!(rate > 0)) {
        wake(f, now + kSubframe);
        return;
      }
      const bool paced = std::isfinite(rate);
      if (paced && static_cast<double>(micros(now)) < f.next_send_us) {
        wake(f, at_micros(static_cast<std::int64_t>(std::ceil(f.next_send_us))));
        return;
      }
      if (f.cc->reacts_to_acks() &&
          static_cast<double>(f.inflight_bits + kDefaultPacketBits) > f.cc->cwnd_bits()) {
        ++f.wake_generation;  // an ack or a loss wakes the sender
        return;
      }
      send_packet(f, now, rate);
      if (paced) {
        f.next_send_us = std::max(f.next_send_us, static_cast<double>(micros(now)) - 1000.0) +
                         static_cast<double>(kDefaultPacketBits) * 1e6 / rate;
      }
    }
  }

  void send_packet(Flow& f, SimTime now, double rate) {
    Packet pkt;
    pkt.flow_id = f.spec.id;
    pkt.seq = f.next_seq++;
    pkt.size_bits = kDefaultPacketBits;
    pkt.sent_at = now;
    pkt.sender_rate_bps = std::isfinite(rate) ? rate : 0.0;
    pkt.sender_rtprop = f.cc->rtprop();

    PacketRecord rec;
    rec.flow_id = pkt.flow_id;
    rec.seq = pkt.seq;
    rec.size_bits = pkt.size_bits;
    rec.sent_us = micros(now);
    f.result.packets.push_back(rec);

    if (f.cc->reacts_to_acks()) {
      f.outstanding.emplace(pkt.seq, Outstanding{now, pkt.size_bits, f.sampler.on_send(now, f.inflight_bits)});
      f.inflight_bits += pkt.size_bits;
      if (f.cc->bounds_inflight_to_bdp()) {
        ++f.result.bdp_checks;
        if (static_cast<double>(f.inflight_bits) > f.cc->cwnd_bits()) ++f.result.bdp_violations;
      }
    }

    const std::optional<SimTime> arrival = f.link->transit(pkt, now);
    if (!arrival) {
      f.result.packets[pkt.seq].dropped = true;
      return;
    }
    Flow* flow = &f;
    sim_.schedule(*arrival, [this, flow, pkt] {
      if (!bs_->enqueue(pkt, flow->spec.id)) flow->result.packets[pkt.seq].dropped = true;
    });
  }

  void tick(std::int64_t sf) {
    mac::SubframeResult res = bs_->run_subframe(sf);

    for (const mac::SubframeAllocation& a : res.allocations) {
      if (a.grants.empty()) {
        result_.allocations.push_back(AllocationRow{sf, a.cell, std::nullopt, 0, 0.0, false, a.idle_prbs()});
      }
      for (const mac::Grant& g : a.grants) {
        result_.allocations.push_back(
            AllocationRow{sf, a.cell, g.user, g.prbs, g.rw_bits_per_prb, g.new_data, a.idle_prbs()});
      }
    }
    for (const mac::CaEvent& e : res.ca_events) {
      result_.ca_events.push_back(CaEventRow{e.subframe, e.user, e.cell, e.activated});
    }
    for (const Packet& p : res.lost) flow_of(p.flow_id).result.packets[p.seq].dropped = true;
    for (const mac::DeliveredPacket& d : res.delivered) {
      Flow* flow = &flow_of(d.packet.flow_id);
      const SimTime at = at_ms(d.release_subframe + 1);
      sim_.schedule(at, [this, flow, d] { on_delivered(*flow, d); });
    }

    for (auto& f : flows_) {
      Flow& flow = *f;
      flow.result.backlog_bits.push_back(bs_->backlog_bits(flow.spec.id));
      flow.result.wired_queue_bits.push_back(flow.link->occupancy_bits(sim_.now()));
      if (flow.client) {
        const std::vector<mac::CellId> active = bs_->active_cells(flow.spec.id);
        const std::uint32_t uid = flow.spec.id;
        flow.client->on_subframe(res.allocations, active,
                                 [this, uid](mac::CellId c) { return bs_->rate(c, uid); });
        const est::CapacityEstimate& e = flow.client->estimate();
        flow.result.estimates.push_back(EstimateSample{e.cp, e.cf, e.ct, e.cf_transport,
                                                       flow.client->state() == est::BottleneckState::Internet});
      }
      housekeeping(flow);
    }

    if (sf + 1 < scenario_.duration_ms) {
      sim_.schedule(at_ms(sf + 1), [this, sf] { tick(sf + 1); });
    }
  }

  void on_delivered(Flow& f, const mac::DeliveredPacket& d) {
    const SimTime now = sim_.now();
    PacketRecord& rec = f.result.packets[d.packet.seq];
    rec.delivered_us = micros(now);
    rec.harq_delay_ms = d.harq_delay_ms;
    rec.dropped = false;
    if (!f.cc->reacts_to_acks()) return;

    std::optional<est::AckPayload> payload;
    if (f.client) payload = f.client->on_packet(d.packet, now);
    const std::uint64_t seq = d.packet.seq;
    Flow* flow = &f;
    sim_.schedule(now + detail::ms(f.spec.uplink_delay_ms), [this, flow, seq, payload] {
      on_ack(*flow, seq, payload);
    });
  }

  Duration rto(const Flow& f) const {
    if (f.srtt == Duration::zero()) return std::chrono::seconds(1);
    return f.srtt + std::max<Duration>(std::chrono::milliseconds(200), 4 * f.rttvar);
  }

  void on_ack(Flow& f, std::uint64_t seq, const std::optional<est::AckPayload>& payload) {
    const SimTime now = sim_.now();
    auto it = f.outstanding.find(seq);
    if (it == f.outstanding.end()) return;  // already declared lost
    const Outstanding o = it->second;
    f.outstanding.erase(it);
    f.inflight_bits -= o.bits;

    const Duration rtt = now - o.sent;
    if (f.srtt == Duration::zero()) {
      f.srtt = rtt;
      f.rttvar = rtt / 2;
    } else {
      const Duration err = rtt > f.srtt ? rtt - f.srtt : f.srtt - rtt;
      f.rttvar = (3 * f.rttvar + err) / 4;
      f.srtt = (7 * f.srtt + rtt) / 8;
    }
    if (f.min_rtt == Duration::zero() || rtt < f.min_rtt) f.min_rtt = rtt;

    cc::AckEvent ev;
    ev.now = now;
    ev.seq = seq;
    ev.acked_bits = o.bits;
    ev.sent_at = o.sent;
    ev.rtt = rtt;
    if (auto rs = f.sampler.on_ack(now, o.sent, o.bits, o.state, f.min_rtt)) {
      ev.delivery_rate_bps = rs->rate_bps;
      ev.app_limited = rs->app_limited;
    }
    if (o.state.delivered_bits >= f.next_round_delivered) {
      ev.round_start = true;
      f.next_round_delivered = f.sampler.delivered_bits();
    }
    f.latest_acked_sent = std::max(f.latest_acked_sent, o.sent);

    // Anything sent well before a packet that has already been acked is lost.
    const Duration reorder = std::max<Duration>(std::chrono::milliseconds(30), f.srtt / 4);
    std::int64_t lost = 0;
    while (!f.outstanding.empty() && f.outstanding.begin()->second.sent + reorder < f.latest_acked_sent) {
      lost += f.outstanding.begin()->second.bits;
      f.inflight_bits -= f.outstanding.begin()->second.bits;
      f.outstanding.erase(f.outstanding.begin());
      ++f.result.losses_detected;
    }
    ev.inflight_bits = f.inflight_bits;
    ev.feedback = payload;
    f.cc->on_ack(ev);
    if (lost > 0) f.cc->on_loss(now, lost);
    trace(f, false);
    try_send(f);
  }

  void housekeeping(Flow& f) {
    if (!f.started) return;
    const SimTime now = sim_.now();
    if (f.cc->reacts_to_acks() && !f.outstanding.empty()) {
      const Duration limit = rto(f);
      std::int64_t lost = 0;
      while (!f.outstanding.empty() && now - f.outstanding.begin()->second.sent > limit) {
        lost += f.outstanding.begin()->second.bits;
        f.inflight_bits -= f.outstanding.begin()->second.bits;
        f.outstanding.erase(f.outstanding.begin());
        ++f.result.losses_detected;
      }
      if (lost > 0) {
        f.cc->on_loss(now, lost);
        try_send(f);
      }
    }
    f.cc->advance(now);
    trace(f, false);
    if (sending(f) && f.cc->reacts_to_acks() && f.inflight_bits == 0 && f.outstanding.empty()) {
      try_send(f);
    }
  }

  void trace(Flow& f, bool force) {
    const SimTime now = sim_.now();
    const std::string_view phase = f.cc->phase_name();
    if (!force && phase == f.last_phase && now - f.last_trace < std::chrono::milliseconds(10)) return;
    f.last_phase = std::string(phase);
    f.last_trace = now;
    SenderSample s;
    s.time_us = micros(now);
    s.phase = f.last_phase;
    s.pacing_rate_bps = f.cc->pacing_rate_bps();
    s.cwnd_bits = f.cc->cwnd_bits();
    s.btlbw_bps = f.cc->btlbw_bps();
    s.rtprop_ms = to_ms(f.cc->rtprop());
    s.cf_bps = f.cc->fair_share_bps();
    f.result.sender.push_back(std::move(s));
  }

  Scenario scenario_;
  std::uint64_t seed_;
  sim::Simulator sim_;
  std::unique_ptr<mac::BaseStation> bs_;
  std::vector<std::unique_ptr<Flow>> flows_;
  SimulationResult result_;
};

inline SimulationResult run_scenario(const Scenario& scenario, std::optional<std::uint64_t> seed = {}) {
  return Simulation(scenario, seed).run();
}

// Runs independent scenarios on worker threads; results keep input order.
inline std::vector<SimulationResult> run_parallel(const std::vector<std::pair<Scenario, std::uint64_t>>& jobs,
                                                  unsigned threads = 0) {
  std::vector<SimulationResult> out(jobs.size());
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(1, jobs.size())));
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(jobs.size());
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < jobs.size(); i = next++) {
        try {
          out[i] = run_scenario(jobs[i].first, jobs[i].second);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (std::thread& t : pool) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

}  // namespace pbecc::harness
