#pragma once

#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "pbecc/harness/metrics.hpp"
#include "pbecc/harness/simulation.hpp"

namespace pbecc::harness {

namespace fs = std::filesystem;

class TraceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace csv {

inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Integer microseconds as milliseconds with three decimals, exact.
inline std::string ms_from_us(std::int64_t us) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%" PRId64 ".%03" PRId64, us / 1000, us % 1000);
  return buf;
}

inline std::int64_t us_from_ms(std::string_view s) {
  const auto dot = s.find('.');
  std::int64_t whole = std::stoll(std::string(s.substr(0, dot)));
  std::int64_t frac = 0;
  if (dot != std::string_view::npos) {
    std::string f(s.substr(dot + 1));
    f.resize(3, '0');
    frac = std::stoll(f);
  }
  return whole * 1000 + frac;
}

inline std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(std::move(cur));
  return out;
}

class Reader {
 public:
  Reader(const fs::path& path, const std::vector<std::string>& header) : path_(path), in_(path) {
    if (!in_) throw TraceError("cannot open " + path.string());
    std::string line;
    if (!std::getline(in_, line) || split(line) != header) {
      throw TraceError(path.string() + ": unexpected header");
    }
    columns_ = header.size();
  }

  bool next(std::vector<std::string>& row) {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_;
      if (line.empty()) continue;
      row = split(line);
      if (row.size() != columns_) {
        throw TraceError(path_.string() + ":" + std::to_string(line_ + 1) + ": wrong column count");
      }
      return true;
    }
    return false;
  }

 private:
  fs::path path_;
  std::ifstream in_;
  std::size_t columns_ = 0;
  std::size_t line_ = 0;
};

}  // namespace csv

inline const std::vector<std::string> kPacketColumns{"flow_id", "seq", "sent_us", "delivered_us",
                                                     "owd_ms", "harq_delay_ms", "dropped"};
inline const std::vector<std::string> kAllocationColumns{"time", "cell", "user", "prbs",
                                                         "rw_bits_per_prb", "ndi", "idle_prbs"};
inline const std::vector<std::string> kSenderColumns{"flow_id", "time", "phase", "pacing_rate",
                                                     "cwnd", "btlbw", "rtprop", "c_f"};
inline const std::vector<std::string> kCaColumns{"time", "user", "cell", "activated"};

inline std::string header(const std::vector<std::string>& cols) {
  std::string h;
  for (std::size_t i = 0; i < cols.size(); ++i) h += (i ? "," : "") + cols[i];
  return h + "\n";
}

inline Json meta_to_json(const RunMeta& m) {
  Json j;
  j["scenario"] = m.scenario;
  j["seed"] = m.seed;
  j["duration_ms"] = m.duration_ms;
  j["warmup_ms"] = m.warmup_ms;
  j["fairness_window_ms"] = Json::array({m.fairness_from_ms, m.fairness_to_ms});
  j["packet_bits"] = kDefaultPacketBits;
  Json cells = Json::array();
  for (const auto& [id, prbs] : m.cells) cells.push_back(Json{{"id", id}, {"prbs", prbs}});
  j["cells"] = std::move(cells);
  Json flows = Json::array();
  for (const FlowMeta& f : m.flows) {
    flows.push_back(Json{{"id", f.id},
                         {"algorithm", f.algorithm},
                         {"start_ms", f.start_ms},
                         {"stop_ms", f.stop_ms},
                         {"cells", f.cells},
                         {"bdp_checks", f.bdp_checks},
                         {"bdp_violations", f.bdp_violations},
                         {"losses_detected", f.losses_detected},
                         {"wired_max_queue_bits", f.wired_max_queue_bits}});
  }
  j["flows"] = std::move(flows);
  return j;
}

inline RunMeta meta_from_json(const Json& j) {
  try {
    RunMeta m;
    m.scenario = j.at("scenario").get<std::string>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.duration_ms = j.at("duration_ms").get<std::int64_t>();
    m.warmup_ms = j.at("warmup_ms").get<std::int64_t>();
    m.fairness_from_ms = j.at("fairness_window_ms").at(0).get<std::int64_t>();
    m.fairness_to_ms = j.at("fairness_window_ms").at(1).get<std::int64_t>();
    for (const Json& c : j.at("cells")) m.cells.emplace_back(c.at("id").get<std::uint32_t>(), c.at("prbs").get<int>());
    for (const Json& f : j.at("flows")) {
      FlowMeta fm;
      fm.id = f.at("id").get<std::uint32_t>();
      fm.algorithm = f.at("algorithm").get<std::string>();
      fm.start_ms = f.at("start_ms").get<std::int64_t>();
      fm.stop_ms = f.at("stop_ms").get<std::int64_t>();
      fm.cells = f.at("cells").get<std::vector<std::uint32_t>>();
      fm.bdp_checks = f.at("bdp_checks").get<std::uint64_t>();
      fm.bdp_violations = f.at("bdp_violations").get<std::uint64_t>();
      fm.losses_detected = f.at("losses_detected").get<std::uint64_t>();
      fm.wired_max_queue_bits = f.at("wired_max_queue_bits").get<std::int64_t>();
      m.flows.push_back(std::move(fm));
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw TraceError(std::string("meta.json: ") + e.what());
  }
}

inline std::string dump(const Json& j) { return j.dump(2) + "\n"; }

inline void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw TraceError("cannot write " + path.string());
  out << text;
}

// Writes metrics.json, meta.json and the CSV traces into `dir`.
inline Json write_run(const fs::path& dir, const SimulationResult& result) {
  fs::create_directories(dir);
  const TraceSet t = to_traces(result);

  {
    std::ofstream out(dir / "packets.csv", std::ios::binary);
    out << header(kPacketColumns);
    for (const PacketRecord& p : t.packets) {
      out << p.flow_id << ',' << p.seq << ',' << p.sent_us << ',';
      if (p.delivered_us) out << *p.delivered_us;
      out << ',';
      if (p.delivered_us) out << csv::ms_from_us(*p.delivered_us - p.sent_us);
      out << ',' << csv::num(p.harq_delay_ms) << ',' << (p.dropped ? 1 : 0) << '\n';
    }
  }
  {
    std::ofstream out(dir / "allocations.csv", std::ios::binary);
    out << header(kAllocationColumns);
    for (const AllocationRow& a : t.allocations) {
      out << a.subframe << ',' << a.cell << ',';
      if (a.user) out << *a.user;
      out << ',' << a.prbs << ',' << csv::num(a.rw_bits_per_prb) << ',' << (a.ndi ? 1 : 0) << ',' << a.idle_prbs
          << '\n';
    }
  }
  {
    std::ofstream out(dir / "sender.csv", std::ios::binary);
    out << header(kSenderColumns);
    for (const SenderRow& r : t.sender) {
      const SenderSample& s = r.sample;
      out << r.flow_id << ',' << csv::ms_from_us(s.time_us) << ',' << s.phase << ',' << csv::num(s.pacing_rate_bps)
          << ',' << csv::num(s.cwnd_bits) << ',' << csv::num(s.btlbw_bps) << ',' << csv::num(s.rtprop_ms) << ','
          << csv::num(s.cf_bps) << '\n';
    }
  }
  {
    std::ofstream out(dir / "ca_events.csv", std::ios::binary);
    out << header(kCaColumns);
    for (const CaEventRow& e : t.ca_events) {
      out << e.subframe << ',' << e.user << ',' << e.cell << ',' << (e.activated ? 1 : 0) << '\n';
    }
  }
  {
    std::ofstream out(dir / "backlog.csv", std::ios::binary);
    out << "time,flow_id,backlog_bits\n";
    for (const FlowResult& f : result.flows) {
      for (std::size_t i = 0; i < f.backlog_bits.size(); ++i) {
        out << i << ',' << f.spec.id << ',' << f.backlog_bits[i] << '\n';
      }
    }
  }
  write_file(dir / "meta.json", dump(meta_to_json(t.meta)));
  write_file(dir / "plots.txt",
             "throughput: metrics.json flows[].throughput_100ms_mbps, x = index * 100 ms\n"
             "delay cdf: packets.csv owd_ms per flow_id, rows with dropped = 0 and a delivered_us\n"
             "allocation: allocations.csv prbs by time, one series per (cell, user); idle_prbs per cell\n"
             "sender: sender.csv pacing_rate, cwnd, btlbw, c_f by time per flow_id; phase as a step band\n"
             "carrier aggregation: ca_events.csv markers over backlog.csv backlog_bits\n");
  const Json metrics = compute_metrics(t);
  write_file(dir / "metrics.json", dump(metrics));
  return metrics;
}

inline TraceSet read_traces(const fs::path& dir) {
  TraceSet t;
  {
    std::ifstream in(dir / "meta.json");
    if (!in) throw TraceError("cannot open " + (dir / "meta.json").string());
    Json j;
    try {
      j = Json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw TraceError(std::string("meta.json: ") + e.what());
    }
    t.meta = meta_from_json(j);
  }
  std::vector<std::string> row;
  try {
    csv::Reader packets(dir / "packets.csv", kPacketColumns);
    while (packets.next(row)) {
      PacketRecord p;
      p.flow_id = static_cast<std::uint32_t>(std::stoul(row[0]));
      p.seq = std::stoull(row[1]);
      p.sent_us = std::stoll(row[2]);
      if (!row[3].empty()) p.delivered_us = std::stoll(row[3]);
      p.harq_delay_ms = std::stod(row[5]);
      p.dropped = row[6] == "1";
      t.packets.push_back(p);
    }
    csv::Reader allocs(dir / "allocations.csv", kAllocationColumns);
    while (allocs.next(row)) {
      AllocationRow a;
      a.subframe = std::stoll(row[0]);
      a.cell = static_cast<std::uint32_t>(std::stoul(row[1]));
      if (!row[2].empty()) a.user = static_cast<std::uint32_t>(std::stoul(row[2]));
      a.prbs = std::stoi(row[3]);
      a.rw_bits_per_prb = std::stod(row[4]);
      a.ndi = row[5] == "1";
      a.idle_prbs = std::stoi(row[6]);
      t.allocations.push_back(a);
    }
    csv::Reader sender(dir / "sender.csv", kSenderColumns);
    while (sender.next(row)) {
      SenderRow r;
      r.flow_id = static_cast<std::uint32_t>(std::stoul(row[0]));
      r.sample.time_us = csv::us_from_ms(row[1]);
      r.sample.phase = row[2];
      r.sample.pacing_rate_bps = std::stod(row[3]);
      r.sample.cwnd_bits = std::stod(row[4]);
      r.sample.btlbw_bps = std::stod(row[5]);
      r.sample.rtprop_ms = std::stod(row[6]);
      r.sample.cf_bps = std::stod(row[7]);
      t.sender.push_back(std::move(r));
    }
    csv::Reader ca(dir / "ca_events.csv", kCaColumns);
    while (ca.next(row)) {
      t.ca_events.push_back(CaEventRow{std::stoll(row[0]), static_cast<std::uint32_t>(std::stoul(row[1])),
                                       static_cast<std::uint32_t>(std::stoul(row[2])), row[3] == "1"});
    }
  } catch (const std::logic_error& e) {
    throw TraceError(std::string("malformed trace value: ") + e.what());
  }
  return t;
}

// Recomputes metrics.json from a trace directory.
inline Json report(const fs::path& dir) { return compute_metrics(read_traces(dir)); }

}  // namespace pbecc::harness
