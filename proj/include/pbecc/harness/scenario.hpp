#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <yaml-cpp/yaml.h>

namespace pbecc::harness {

// Schema violation, with the 1-based source line when known.
class ScenarioError : public std::runtime_error {
 public:
  ScenarioError(int line, std::string field, const std::string& message)
      : std::runtime_error(format(line, field, message)), line_(line), field_(std::move(field)) {}

  int line() const { return line_; }
  const std::string& field() const { return field_; }

 private:
  static std::string format(int line, const std::string& field, const std::string& message) {
    std::ostringstream os;
    if (line > 0) os << "line " << line << ": ";
    os << field << ": " << message;
    return os.str();
  }

  int line_;
  std::string field_;
};

enum class Algorithm { Pbe, Bbr, Aimd, Cbr };

inline const char* to_string(Algorithm a) {
  switch (a) {
    case Algorithm::Pbe: return "pbe";
    case Algorithm::Bbr: return "bbr";
    case Algorithm::Aimd: return "aimd";
    case Algorithm::Cbr: return "cbr";
  }
  return "?";
}

struct TimedValue {
  std::int64_t at_ms = 0;
  double value = 0.0;
};

struct CellSpec {
  std::uint32_t id = 0;
  int prbs = 100;
  double rw_bits_per_prb = 1000.0;
  double ber = 0.0;
  std::vector<TimedValue> rw_timeline;  // later changes of the cell-wide R_w
};

struct WiredSpec {
  double rate_mbps = 0.0;  // 0: no serialization limit
  double one_way_delay_ms = 20.0;
  double queue_kb = 0.0;   // 0: unbounded
};

struct FlowSpec {
  std::uint32_t id = 1;
  Algorithm algorithm = Algorithm::Pbe;
  std::vector<std::uint32_t> cells{0};
  std::int64_t start_ms = 0;
  std::optional<std::int64_t> stop_ms;
  std::optional<double> ber;
  std::vector<TimedValue> ber_timeline;
  WiredSpec wired;
  double uplink_delay_ms = 20.0;
  std::vector<TimedValue> cbr_mbps;          // CBR schedule, relative to start
  std::vector<std::pair<std::uint32_t, std::vector<TimedValue>>> rw_timelines;  // per-cell overrides
};

struct BackgroundSpec {
  std::uint32_t cell = 0;
  std::uint32_t user = 1'000'000;
  std::int64_t start_ms = 0;
  std::int64_t duration_ms = 1;
  int prbs = 4;
  std::int64_t repeat_every_ms = 0;  // 0: once
  int count = 1;
};

struct ForcedFailureSpec {
  std::uint32_t cell = 0;
  std::uint32_t flow = 1;
  std::int64_t subframe = 0;
  int failures = 1;
};

struct CaSpec {
  double activate_share = 0.9;
  int activate_window_ms = 100;
  double deactivate_ratio = 0.8;
  int deactivate_window_ms = 500;
};

struct Scenario {
  std::string name;
  std::string description;
  std::int64_t duration_ms = 1000;
  std::uint64_t seed = 1;
  std::int64_t warmup_ms = 0;
  std::optional<std::int64_t> fairness_start_ms;
  std::optional<std::int64_t> fairness_end_ms;
  double user_buffer_kb = 4000.0;
  double header_overhead = 0.068;
  CaSpec ca;
  std::vector<CellSpec> cells;
  std::vector<FlowSpec> flows;
  std::vector<BackgroundSpec> background;
  std::vector<ForcedFailureSpec> forced_failures;

  std::int64_t fairness_from_ms() const { return fairness_start_ms.value_or(warmup_ms); }
  std::int64_t fairness_to_ms() const { return fairness_end_ms.value_or(duration_ms); }
  std::int64_t stop_of(const FlowSpec& f) const { return std::min(f.stop_ms.value_or(duration_ms), duration_ms); }
};

namespace detail {

inline int line_of(const YAML::Node& n) { return n.Mark().line >= 0 ? n.Mark().line + 1 : 0; }

class Reader {
 public:
  Reader(const YAML::Node& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.IsMap()) throw ScenarioError(line_of(node_), path_, "expected a mapping");
  }

  template <typename T>
  T get(const std::string& key, T fallback) {
    seen_.insert(key);
    const YAML::Node v = node_[key];
    if (!v) return fallback;
    return convert<T>(v, key);
  }

  template <typename T>
  T require(const std::string& key) {
    seen_.insert(key);
    const YAML::Node v = node_[key];
    if (!v) throw ScenarioError(line_of(node_), field(key), "missing required field");
    return convert<T>(v, key);
  }

  template <typename T>
  std::optional<T> optional(const std::string& key) {
    seen_.insert(key);
    const YAML::Node v = node_[key];
    if (!v || v.IsNull()) return std::nullopt;
    return convert<T>(v, key);
  }

  YAML::Node child(const std::string& key) {
    seen_.insert(key);
    return node_[key];
  }

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  void finish() const {
    for (const auto& kv : node_) {
      const std::string key = kv.first.as<std::string>();
      if (!seen_.count(key)) throw ScenarioError(line_of(kv.first), field(key), "unknown field");
    }
  }

 private:
  template <typename T>
  T convert(const YAML::Node& v, const std::string& key) {
    try {
      return v.as<T>();
    } catch (const YAML::Exception&) {
      throw ScenarioError(line_of(v), field(key), "has the wrong type");
    }
  }

  YAML::Node node_;
  std::string path_;
  std::set<std::string> seen_;
};

inline void check(bool ok, const YAML::Node& at, const std::string& field, const std::string& message) {
  if (!ok) throw ScenarioError(line_of(at), field, message);
}

inline std::vector<TimedValue> parse_timeline(const YAML::Node& node, const std::string& path,
                                              const std::string& value_key) {
  std::vector<TimedValue> out;
  if (!node) return out;
  check(node.IsSequence(), node, path, "expected a list");
  for (std::size_t i = 0; i < node.size(); ++i) {
    const std::string p = path + "[" + std::to_string(i) + "]";
    Reader r(node[i], p);
    TimedValue tv;
    tv.at_ms = r.require<std::int64_t>("at_ms");
    tv.value = r.require<double>(value_key);
    r.finish();
    check(tv.at_ms >= 0, node[i], p + ".at_ms", "must be >= 0");
    check(out.empty() || tv.at_ms > out.back().at_ms, node[i], p + ".at_ms", "must be increasing");
    out.push_back(tv);
  }
  return out;
}

}  // namespace detail

// Parses and validates a scenario document.
inline Scenario parse_scenario(const std::string& text) {
  using detail::check;
  using detail::Reader;
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ScenarioError(e.mark.line + 1, "document", e.msg);
  }
  Reader r(root, "");
  Scenario s;
  s.name = r.require<std::string>("name");
  s.description = r.get<std::string>("description", "");
  s.duration_ms = r.require<std::int64_t>("duration_ms");
  check(s.duration_ms > 0, root["duration_ms"], "duration_ms", "must be > 0");
  s.seed = r.require<std::uint64_t>("seed");
  s.warmup_ms = r.get<std::int64_t>("warmup_ms", 0);
  check(s.warmup_ms >= 0 && s.warmup_ms < s.duration_ms, root, "warmup_ms", "must be in [0, duration_ms)");
  s.user_buffer_kb = r.get<double>("user_buffer_kb", s.user_buffer_kb);
  check(s.user_buffer_kb > 0, root, "user_buffer_kb", "must be > 0");
  s.header_overhead = r.get<double>("header_overhead", s.header_overhead);
  check(s.header_overhead >= 0 && s.header_overhead < 1, root, "header_overhead", "must be in [0, 1)");

  if (YAML::Node fw = r.child("fairness_window_ms")) {
    check(fw.IsSequence() && fw.size() == 2, fw, "fairness_window_ms", "expected [start, end]");
    s.fairness_start_ms = fw[0].as<std::int64_t>();
    s.fairness_end_ms = fw[1].as<std::int64_t>();
    check(*s.fairness_start_ms >= 0 && *s.fairness_start_ms < *s.fairness_end_ms &&
              *s.fairness_end_ms <= s.duration_ms,
          fw, "fairness_window_ms", "must satisfy 0 <= start < end <= duration_ms");
  }

  if (YAML::Node ca = r.child("ca")) {
    Reader c(ca, "ca");
    s.ca.activate_share = c.get<double>("activate_share", s.ca.activate_share);
    s.ca.activate_window_ms = c.get<int>("activate_window_ms", s.ca.activate_window_ms);
    s.ca.deactivate_ratio = c.get<double>("deactivate_ratio", s.ca.deactivate_ratio);
    s.ca.deactivate_window_ms = c.get<int>("deactivate_window_ms", s.ca.deactivate_window_ms);
    c.finish();
    check(s.ca.activate_window_ms > 0 && s.ca.deactivate_window_ms > 0, ca, "ca", "windows must be > 0");
  }

  const YAML::Node cells = r.child("cells");
  check(cells && cells.IsSequence() && cells.size() > 0, cells ? cells : root, "cells", "expected a non-empty list");
  std::set<std::uint32_t> cell_ids;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const std::string p = "cells[" + std::to_string(i) + "]";
    Reader c(cells[i], p);
    CellSpec cell;
    cell.id = c.require<std::uint32_t>("id");
    cell.prbs = c.require<int>("prbs");
    cell.rw_bits_per_prb = c.require<double>("rw_bits_per_prb");
    cell.ber = c.get<double>("ber", 0.0);
    cell.rw_timeline = detail::parse_timeline(c.child("rw_timeline"), p + ".rw_timeline", "rw_bits_per_prb");
    c.finish();
    check(cell_ids.insert(cell.id).second, cells[i], p + ".id", "duplicate cell id");
    check(cell.prbs > 0, cells[i], p + ".prbs", "must be > 0");
    check(cell.rw_bits_per_prb > 0, cells[i], p + ".rw_bits_per_prb", "must be > 0");
    check(cell.ber >= 0 && cell.ber < 1, cells[i], p + ".ber", "must be in [0, 1)");
    for (const TimedValue& tv : cell.rw_timeline) {
      check(tv.value > 0, cells[i], p + ".rw_timeline", "rates must be > 0");
    }
    s.cells.push_back(std::move(cell));
  }

  std::set<std::uint32_t> flow_ids;
  if (YAML::Node flows = r.child("flows"); flows && !flows.IsNull()) {
    check(flows.IsSequence(), flows, "flows", "expected a list");
    for (std::size_t i = 0; i < flows.size(); ++i) {
      const std::string p = "flows[" + std::to_string(i) + "]";
      Reader f(flows[i], p);
      FlowSpec flow;
      flow.id = f.require<std::uint32_t>("id");
      const std::string algo = f.require<std::string>("algorithm");
      if (algo == "pbe") {
        flow.algorithm = Algorithm::Pbe;
      } else if (algo == "bbr") {
        flow.algorithm = Algorithm::Bbr;
      } else if (algo == "aimd") {
        flow.algorithm = Algorithm::Aimd;
      } else if (algo == "cbr") {
        flow.algorithm = Algorithm::Cbr;
      } else {
        throw ScenarioError(detail::line_of(flows[i]["algorithm"]), p + ".algorithm",
                            "must be one of pbe, bbr, aimd, cbr");
      }
      flow.cells = f.get<std::vector<std::uint32_t>>("cells", flow.cells);
      flow.start_ms = f.get<std::int64_t>("start_ms", 0);
      flow.stop_ms = f.optional<std::int64_t>("stop_ms");
      flow.ber = f.optional<double>("ber");
      flow.ber_timeline = detail::parse_timeline(f.child("ber_timeline"), p + ".ber_timeline", "ber");
      flow.uplink_delay_ms = f.get<double>("uplink_delay_ms", flow.uplink_delay_ms);
      if (YAML::Node w = f.child("wired")) {
        Reader wr(w, p + ".wired");
        flow.wired.rate_mbps = wr.get<double>("rate_mbps", 0.0);
        flow.wired.one_way_delay_ms = wr.get<double>("one_way_delay_ms", flow.wired.one_way_delay_ms);
        flow.wired.queue_kb = wr.get<double>("queue_kb", 0.0);
        wr.finish();
        check(flow.wired.rate_mbps >= 0 && flow.wired.one_way_delay_ms >= 0 && flow.wired.queue_kb >= 0, w,
              p + ".wired", "values must be >= 0");
      }
      flow.cbr_mbps = detail::parse_timeline(f.child("cbr_schedule"), p + ".cbr_schedule", "rate_mbps");
      if (YAML::Node rt = f.child("rw_timelines")) {
        check(rt.IsSequence(), rt, p + ".rw_timelines", "expected a list");
        for (std::size_t k = 0; k < rt.size(); ++k) {
          const std::string q = p + ".rw_timelines[" + std::to_string(k) + "]";
          Reader tr(rt[k], q);
          const auto cell = tr.require<std::uint32_t>("cell");
          auto points = detail::parse_timeline(tr.child("points"), q + ".points", "rw_bits_per_prb");
          tr.finish();
          check(cell_ids.count(cell) > 0, rt[k], q + ".cell", "unknown cell");
          for (const TimedValue& tv : points) check(tv.value > 0, rt[k], q + ".points", "rates must be > 0");
          flow.rw_timelines.emplace_back(cell, std::move(points));
        }
      }
      f.finish();

      check(flow_ids.insert(flow.id).second, flows[i], p + ".id", "duplicate flow id");
      check(flow.id > 0 && flow.id < 1'000'000, flows[i], p + ".id", "must be in [1, 1000000)");
      check(!flow.cells.empty(), flows[i], p + ".cells", "must not be empty");
      for (std::uint32_t c : flow.cells) check(cell_ids.count(c) > 0, flows[i], p + ".cells", "unknown cell");
      check(flow.start_ms >= 0 && flow.start_ms < s.duration_ms, flows[i], p + ".start_ms",
            "must be in [0, duration_ms)");
      check(!flow.stop_ms || *flow.stop_ms > flow.start_ms, flows[i], p + ".stop_ms", "must be after start_ms");
      check(!flow.ber || (*flow.ber >= 0 && *flow.ber < 1), flows[i], p + ".ber", "must be in [0, 1)");
      for (const TimedValue& tv : flow.ber_timeline) {
        check(tv.value >= 0 && tv.value < 1, flows[i], p + ".ber_timeline", "values must be in [0, 1)");
      }
      check(flow.uplink_delay_ms >= 0, flows[i], p + ".uplink_delay_ms", "must be >= 0");
      if (flow.algorithm == Algorithm::Cbr) {
        check(!flow.cbr_mbps.empty() && flow.cbr_mbps.front().at_ms == 0, flows[i], p + ".cbr_schedule",
              "CBR flows need a schedule starting at 0");
        for (const TimedValue& tv : flow.cbr_mbps) check(tv.value >= 0, flows[i], p + ".cbr_schedule", "rates must be >= 0");
      } else {
        check(flow.cbr_mbps.empty(), flows[i], p + ".cbr_schedule", "only CBR flows take a schedule");
      }
      s.flows.push_back(std::move(flow));
    }
  }

  if (YAML::Node bg = r.child("background"); bg && !bg.IsNull()) {
    check(bg.IsSequence(), bg, "background", "expected a list");
    for (std::size_t i = 0; i < bg.size(); ++i) {
      const std::string p = "background[" + std::to_string(i) + "]";
      Reader b(bg[i], p);
      BackgroundSpec spec;
      spec.cell = b.require<std::uint32_t>("cell");
      spec.user = b.get<std::uint32_t>("user", static_cast<std::uint32_t>(1'000'000 + i));
      spec.start_ms = b.require<std::int64_t>("start_ms");
      spec.duration_ms = b.get<std::int64_t>("duration_ms", 1);
      spec.prbs = b.get<int>("prbs", 4);
      spec.repeat_every_ms = b.get<std::int64_t>("repeat_every_ms", 0);
      spec.count = b.get<int>("count", 1);
      b.finish();
      check(cell_ids.count(spec.cell) > 0, bg[i], p + ".cell", "unknown cell");
      check(spec.user >= 1'000'000, bg[i], p + ".user", "background users must be >= 1000000");
      check(spec.start_ms >= 0 && spec.duration_ms > 0, bg[i], p, "start_ms >= 0 and duration_ms > 0 required");
      check(spec.count >= 1 && spec.repeat_every_ms >= 0, bg[i], p, "count >= 1 and repeat_every_ms >= 0 required");
      check(spec.count == 1 || spec.repeat_every_ms >= spec.duration_ms, bg[i], p + ".repeat_every_ms",
            "repeats must not overlap");
      const auto it = std::find_if(s.cells.begin(), s.cells.end(), [&](const CellSpec& c) { return c.id == spec.cell; });
      check(spec.prbs > 0 && spec.prbs <= it->prbs, bg[i], p + ".prbs", "must be in (0, cell prbs]");
      s.background.push_back(spec);
    }
  }

  if (YAML::Node ff = r.child("forced_failures"); ff && !ff.IsNull()) {
    check(ff.IsSequence(), ff, "forced_failures", "expected a list");
    for (std::size_t i = 0; i < ff.size(); ++i) {
      const std::string p = "forced_failures[" + std::to_string(i) + "]";
      Reader b(ff[i], p);
      ForcedFailureSpec spec;
      spec.cell = b.require<std::uint32_t>("cell");
      spec.flow = b.require<std::uint32_t>("flow");
      spec.subframe = b.require<std::int64_t>("subframe");
      spec.failures = b.get<int>("failures", 1);
      b.finish();
      check(cell_ids.count(spec.cell) > 0, ff[i], p + ".cell", "unknown cell");
      check(flow_ids.count(spec.flow) > 0, ff[i], p + ".flow", "unknown flow");
      check(spec.failures >= 1 && spec.failures <= 4, ff[i], p + ".failures", "must be in [1, 4]");
      s.forced_failures.push_back(spec);
    }
  }
  r.finish();
  return s;
}

inline Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError(0, path.string(), "cannot open scenario file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str());
}

}  // namespace pbecc::harness
