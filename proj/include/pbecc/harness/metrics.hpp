#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "pbecc/cc/pbe_sender.hpp"
#include "pbecc/harness/simulation.hpp"
#include "pbecc/sim/packet.hpp"

namespace pbecc::harness {

// (sum x)^2 / (n * sum x^2).
inline double jain_index(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("jain index of an empty set");
  double sum = 0.0;
  double sq = 0.0;
  for (double v : values) {
    if (!(v >= 0.0)) throw std::invalid_argument("jain index needs non-negative values");
    sum += v;
    sq += v * v;
  }
  if (!(sum > 0.0)) throw std::invalid_argument("jain index needs a positive value");
  return sum * sum / (static_cast<double>(values.size()) * sq);
}

struct Delivery {
  std::int64_t delivered_us = 0;
  std::int64_t bits = 0;
};

// Bits delivered per window over [from_us, to_us), in bits per second.
// Deliveries outside the span are ignored; the last window may be partial
// and is scaled by its true length.
inline std::vector<double> windowed_throughput(std::span<const Delivery> deliveries, std::int64_t from_us,
                                               std::int64_t to_us, std::int64_t window_us = 100'000) {
  if (window_us <= 0 || to_us < from_us) throw std::invalid_argument("bad throughput window");
  const std::int64_t span = to_us - from_us;
  const std::size_t n = static_cast<std::size_t>((span + window_us - 1) / window_us);
  std::vector<double> bits(n, 0.0);
  for (const Delivery& d : deliveries) {
    if (d.delivered_us < from_us || d.delivered_us >= to_us) continue;
    bits[static_cast<std::size_t>((d.delivered_us - from_us) / window_us)] += static_cast<double>(d.bits);
  }
  for (std::size_t i = 0; i < n; ++i) {
    const std::int64_t len = std::min(window_us, span - static_cast<std::int64_t>(i) * window_us);
    bits[i] = bits[i] * 1e6 / static_cast<double>(len);
  }
  return bits;
}

// Linear interpolation between closest ranks.
inline double percentile(std::vector<double> values, double q) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const double pos = q / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (values[hi] - values[lo]) * (pos - static_cast<double>(lo));
}

inline constexpr std::array<double, 6> kPercentiles{10, 25, 50, 75, 90, 95};

struct StateFractions {
  double wireless = 0.0;
  double internet = 0.0;
};

struct PhaseChange {
  std::int64_t time_us = 0;
  bool internet = false;
};

// Share of [from_us, to_us) spent in each bottleneck state, given the state
// in force from each change onwards. Time before the first change counts as
// wireless.
inline StateFractions time_in_state(std::span<const PhaseChange> changes, std::int64_t from_us, std::int64_t to_us) {
  StateFractions out;
  if (to_us <= from_us) {
    out.wireless = 1.0;
    return out;
  }
  bool internet = false;
  std::int64_t t = from_us;
  double in_internet = 0.0;
  for (const PhaseChange& c : changes) {
    if (c.time_us <= from_us) {
      internet = c.internet;
      continue;
    }
    if (c.time_us >= to_us) break;
    if (internet) in_internet += static_cast<double>(c.time_us - t);
    t = c.time_us;
    internet = c.internet;
  }
  if (internet) in_internet += static_cast<double>(to_us - t);
  out.internet = in_internet / static_cast<double>(to_us - from_us);
  out.wireless = 1.0 - out.internet;
  return out;
}

struct FlowMeta {
  std::uint32_t id = 0;
  std::string algorithm;
  std::int64_t start_ms = 0;
  std::int64_t stop_ms = 0;
  std::vector<std::uint32_t> cells;
  std::uint64_t bdp_checks = 0;
  std::uint64_t bdp_violations = 0;
  std::uint64_t losses_detected = 0;
  std::int64_t wired_max_queue_bits = 0;
};

struct RunMeta {
  std::string scenario;
  std::uint64_t seed = 0;
  std::int64_t duration_ms = 0;
  std::int64_t warmup_ms = 0;
  std::int64_t fairness_from_ms = 0;
  std::int64_t fairness_to_ms = 0;
  std::vector<std::pair<std::uint32_t, int>> cells;  // id, PRBs
  std::vector<FlowMeta> flows;
};

struct SenderRow {
  std::uint32_t flow_id = 0;
  SenderSample sample;
};

// Everything the metrics are computed from; exactly what the trace files hold.
struct TraceSet {
  RunMeta meta;
  std::vector<PacketRecord> packets;
  std::vector<AllocationRow> allocations;
  std::vector<SenderRow> sender;
  std::vector<CaEventRow> ca_events;
};

inline TraceSet to_traces(const SimulationResult& r) {
  TraceSet t;
  t.meta.scenario = r.scenario.name;
  t.meta.seed = r.seed;
  t.meta.duration_ms = r.scenario.duration_ms;
  t.meta.warmup_ms = r.scenario.warmup_ms;
  t.meta.fairness_from_ms = r.scenario.fairness_from_ms();
  t.meta.fairness_to_ms = r.scenario.fairness_to_ms();
  for (const CellSpec& c : r.scenario.cells) t.meta.cells.emplace_back(c.id, c.prbs);
  for (const FlowResult& f : r.flows) {
    FlowMeta m;
    m.id = f.spec.id;
    m.algorithm = to_string(f.spec.algorithm);
    m.start_ms = f.spec.start_ms;
    m.stop_ms = f.stop_ms;
    m.cells = f.spec.cells;
    m.bdp_checks = f.bdp_checks;
    m.bdp_violations = f.bdp_violations;
    m.losses_detected = f.losses_detected;
    m.wired_max_queue_bits = f.wired_max_queue_bits;
    t.meta.flows.push_back(std::move(m));
    t.packets.insert(t.packets.end(), f.packets.begin(), f.packets.end());
    for (const SenderSample& s : f.sender) t.sender.push_back(SenderRow{f.spec.id, s});
  }
  t.allocations = r.allocations;
  t.ca_events = r.ca_events;
  return t;
}

inline bool is_internet_phase(const std::string& phase) {
  return phase == "PreDrain" || phase.rfind("Internet", 0) == 0;
}

using Json = nlohmann::ordered_json;

inline Json compute_metrics(const TraceSet& t) {
  const RunMeta& m = t.meta;
  const std::int64_t fair_from_us = m.fairness_from_ms * 1000;
  const std::int64_t fair_to_us = m.fairness_to_ms * 1000;
  const std::int64_t warm_us = m.warmup_ms * 1000;

  std::map<std::uint32_t, std::vector<const PacketRecord*>> by_flow;
  for (const PacketRecord& p : t.packets) by_flow[p.flow_id].push_back(&p);

  // Mean PRBs per subframe for each user inside the fairness window.
  std::map<std::uint32_t, double> prbs_in_window;
  std::map<std::uint32_t, double> idle_by_cell;
  std::map<std::uint32_t, std::int64_t> subframes_by_cell;
  std::map<std::pair<std::int64_t, std::uint32_t>, bool> seen_subframe;
  for (const AllocationRow& a : t.allocations) {
    if (seen_subframe.emplace(std::make_pair(a.subframe, a.cell), true).second) {
      if (a.subframe >= m.warmup_ms) {
        idle_by_cell[a.cell] += a.idle_prbs;
        subframes_by_cell[a.cell] += 1;
      }
    }
    if (a.user && a.subframe >= m.fairness_from_ms && a.subframe < m.fairness_to_ms) {
      prbs_in_window[*a.user] += a.prbs;
    }
  }
  const double window_subframes = static_cast<double>(m.fairness_to_ms - m.fairness_from_ms);

  Json report;
  report["scenario"] = m.scenario;
  report["seed"] = m.seed;
  report["duration_ms"] = m.duration_ms;
  report["warmup_ms"] = m.warmup_ms;
  report["fairness_window_ms"] = Json::array({m.fairness_from_ms, m.fairness_to_ms});

  Json flows = Json::array();
  std::vector<double> fair_prbs;
  std::vector<double> fair_tput;
  for (const FlowMeta& f : m.flows) {
    const auto& pkts = by_flow[f.id];
    std::uint64_t delivered = 0;
    std::uint64_t dropped = 0;
    std::int64_t delivered_bits = 0;
    std::int64_t window_bits = 0;
    std::uint64_t harq_delayed = 0;
    double harq_max = 0.0;
    std::vector<double> owd;
    std::vector<Delivery> deliveries;
    for (const PacketRecord* p : pkts) {
      if (p->dropped) ++dropped;
      if (!p->delivered_us) continue;
      ++delivered;
      delivered_bits += p->size_bits;
      deliveries.push_back(Delivery{*p->delivered_us, p->size_bits});
      if (*p->delivered_us >= fair_from_us && *p->delivered_us < fair_to_us) window_bits += p->size_bits;
      if (p->harq_delay_ms > 0) ++harq_delayed;
      harq_max = std::max(harq_max, p->harq_delay_ms);
      if (p->sent_us >= warm_us) owd.push_back(p->owd_ms());
    }
    const std::int64_t active_us = (f.stop_ms - f.start_ms) * 1000;

    Json jf;
    jf["flow_id"] = f.id;
    jf["algorithm"] = f.algorithm;
    jf["start_ms"] = f.start_ms;
    jf["stop_ms"] = f.stop_ms;
    jf["cells"] = f.cells;
    jf["packets_sent"] = pkts.size();
    jf["packets_delivered"] = delivered;
    jf["packets_dropped"] = dropped;
    jf["delivered_bits"] = delivered_bits;
    jf["mean_throughput_mbps"] = active_us > 0 ? static_cast<double>(delivered_bits) / active_us : 0.0;
    jf["window_throughput_mbps"] =
        window_subframes > 0 ? static_cast<double>(window_bits) / (window_subframes * 1000.0) : 0.0;
    Json series = Json::array();
    for (double bps : windowed_throughput(deliveries, 0, m.duration_ms * 1000)) series.push_back(bps / 1e6);
    jf["throughput_100ms_mbps"] = std::move(series);

    Json delay;
    delay["samples"] = owd.size();
    delay["min"] = owd.empty() ? 0.0 : *std::min_element(owd.begin(), owd.end());
    delay["mean"] = owd.empty() ? 0.0 : std::accumulate(owd.begin(), owd.end(), 0.0) / static_cast<double>(owd.size());
    for (double q : kPercentiles) delay["p" + std::to_string(static_cast<int>(q))] = percentile(owd, q);
    jf["owd_ms"] = std::move(delay);
    jf["harq_delayed_packets"] = harq_delayed;
    jf["harq_max_delay_ms"] = harq_max;
    jf["mean_prbs_in_window"] = window_subframes > 0 ? prbs_in_window[f.id] / window_subframes : 0.0;

    Json ca = Json::array();
    for (const CaEventRow& e : t.ca_events) {
      if (e.user != f.id) continue;
      ca.push_back(Json{{"time_ms", e.subframe}, {"cell", e.cell}, {"activated", e.activated}});
    }
    jf["ca_events"] = std::move(ca);

    if (f.algorithm == "pbe") {
      std::vector<PhaseChange> changes;
      for (const SenderRow& s : t.sender) {
        if (s.flow_id == f.id) changes.push_back(PhaseChange{s.sample.time_us, is_internet_phase(s.sample.phase)});
      }
      const StateFractions st =
          time_in_state(changes, std::max(f.start_ms, m.warmup_ms) * 1000, f.stop_ms * 1000);
      jf["time_in_state"] = Json{{"wireless", st.wireless}, {"internet", st.internet}};
    }
    jf["bdp_checks"] = f.bdp_checks;
    jf["bdp_violations"] = f.bdp_violations;
    jf["losses_detected"] = f.losses_detected;
    jf["wired_max_queue_bits"] = f.wired_max_queue_bits;
    flows.push_back(std::move(jf));

    if (f.start_ms < m.fairness_to_ms && f.stop_ms > m.fairness_from_ms) {
      fair_prbs.push_back(window_subframes > 0 ? prbs_in_window[f.id] / window_subframes : 0.0);
      fair_tput.push_back(static_cast<double>(window_bits));
    }
  }
  report["flows"] = std::move(flows);

  auto jain_or_zero = [](const std::vector<double>& v) {
    const bool positive = std::any_of(v.begin(), v.end(), [](double x) { return x > 0; });
    return positive ? jain_index(v) : 0.0;
  };
  report["jain_prbs"] = jain_or_zero(fair_prbs);
  report["jain_throughput"] = jain_or_zero(fair_tput);

  Json cells = Json::array();
  for (const auto& [id, prbs] : m.cells) {
    const std::int64_t n = subframes_by_cell[id];
    cells.push_back(Json{{"cell", id},
                         {"prbs", prbs},
                         {"mean_idle_prbs", n > 0 ? idle_by_cell[id] / static_cast<double>(n) : 0.0}});
  }
  report["cells"] = std::move(cells);
  return report;
}

inline Json compute_metrics(const SimulationResult& r) { return compute_metrics(to_traces(r)); }

}  // namespace pbecc::harness
