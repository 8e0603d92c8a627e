#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <unistd.h>
#include <vector>

#include "pbecc/harness/io.hpp"
#include "pbecc/harness/scenario.hpp"
#include "pbecc/harness/simulation.hpp"

using namespace pbecc;
using namespace pbecc::harness;
namespace fs = std::filesystem;

namespace {

const std::string kMinimal = R"(name: t
duration_ms: 500
seed: 3
cells:
  - {id: 0, prbs: 100, rw_bits_per_prb: 1000}
flows:
  - {id: 1, algorithm: pbe}
)";

ScenarioError parse_error(const std::string& text) {
  try {
    parse_scenario(text);
  } catch (const ScenarioError& e) {
    return e;
  }
  ADD_FAILURE() << "no error for:\n" << text;
  return ScenarioError(0, "", "");
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path temp_dir(const std::string& name) {
  fs::path d = fs::temp_directory_path() / ("pbecc_test_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(d);
  return d;
}

}  // namespace

TEST(Scenario, MinimalParsesWithDefaults) {
  Scenario s = parse_scenario(kMinimal);
  EXPECT_EQ(s.name, "t");
  EXPECT_EQ(s.seed, 3u);
  ASSERT_EQ(s.flows.size(), 1u);
  EXPECT_EQ(s.flows[0].algorithm, Algorithm::Pbe);
  EXPECT_EQ(s.flows[0].cells, (std::vector<std::uint32_t>{0}));
  EXPECT_DOUBLE_EQ(s.header_overhead, 0.068);
  EXPECT_EQ(s.fairness_from_ms(), 0);
  EXPECT_EQ(s.fairness_to_ms(), 500);
  EXPECT_EQ(s.stop_of(s.flows[0]), 500);
}

TEST(Scenario, UnknownFieldReportsLineAndPath) {
  auto e = parse_error(kMinimal + "  - {id: 2, algorithm: pbe, colour: red}\n");
  EXPECT_EQ(e.field(), "flows[1].colour");
  EXPECT_EQ(e.line(), 8);
}

TEST(Scenario, MissingSeed) {
  auto e = parse_error("name: t\nduration_ms: 10\ncells:\n  - {id: 0}\n");
  EXPECT_EQ(e.field(), "seed");
}

TEST(Scenario, BadAlgorithm) {
  std::string text = kMinimal;
  text.replace(text.find("pbe"), 3, "cubic");
  auto e = parse_error(text);
  EXPECT_EQ(e.field(), "flows[0].algorithm");
  EXPECT_EQ(e.line(), 7);
}

TEST(Scenario, WrongTypeAndRange) {
  std::string text = kMinimal;
  text.replace(text.find("500"), 3, "abc");
  EXPECT_EQ(parse_error(text).field(), "duration_ms");
  EXPECT_EQ(parse_error(kMinimal + "forced_failures:\n  - {cell: 0, flow: 9, subframe: 1}\n").field(),
            "forced_failures[0].flow");
  EXPECT_EQ(parse_error(kMinimal + "header_overhead: 1.5\n").field(), "header_overhead");
}

TEST(Scenario, SyntaxErrorHasLine) {
  auto e = parse_error("name: t\nseed: [1,\n");
  EXPECT_GT(e.line(), 0);
}

TEST(Scenario, CbrNeedsSchedule) {
  std::string text = kMinimal;
  text.replace(text.find("pbe"), 3, "cbr");
  EXPECT_EQ(parse_error(text).field(), "flows[0].cbr_schedule");
}

TEST(Scenario, BundledScenariosParse) {
  int n = 0;
  for (const auto& entry : fs::directory_iterator(PBECC_SCENARIO_DIR)) {
    if (entry.path().extension() != ".yaml") continue;
    EXPECT_NO_THROW(load_scenario(entry.path())) << entry.path();
    ++n;
  }
  EXPECT_GE(n, 9);
}

TEST(Jain, Examples) {
  EXPECT_DOUBLE_EQ(jain_index(std::vector<double>{10, 10, 10}), 1.0);
  EXPECT_DOUBLE_EQ(jain_index(std::vector<double>{10, 0}), 0.5);
  EXPECT_NEAR(jain_index(std::vector<double>{30, 30, 40}), 0.98, 0.001);
  EXPECT_THROW(jain_index(std::vector<double>{}), std::invalid_argument);
  EXPECT_THROW(jain_index(std::vector<double>{0, 0}), std::invalid_argument);
  EXPECT_THROW(jain_index(std::vector<double>{1, -1}), std::invalid_argument);
}

// Against the textbook form 1 / (1 + CoV^2), with the population variance.
TEST(Jain, MatchesCoefficientOfVariationForm) {
  std::mt19937_64 gen(31);
  std::uniform_real_distribution<double> u(0.0, 100.0);
  for (int i = 0; i < 1000; ++i) {
    std::vector<double> v(1 + gen() % 10);
    for (double& x : v) x = u(gen);
    double mean = 0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double var = 0;
    for (double x : v) var += (x - mean) * (x - mean);
    var /= static_cast<double>(v.size());
    const double want = 1.0 / (1.0 + var / (mean * mean));
    const double got = jain_index(v);
    ASSERT_NEAR(got, want, 1e-12);
    ASSERT_GE(got, 1.0 / static_cast<double>(v.size()) - 1e-12);
    ASSERT_LE(got, 1.0 + 1e-12);
  }
}

TEST(Throughput, WindowsSumToTotal) {
  std::mt19937_64 gen(6);
  std::vector<Delivery> d;
  std::int64_t total = 0;
  for (int i = 0; i < 5000; ++i) {
    Delivery x{static_cast<std::int64_t>(gen() % 1'000'000), 1 + static_cast<std::int64_t>(gen() % 12000)};
    d.push_back(x);
    total += x.bits;
  }
  auto w = windowed_throughput(d, 0, 1'000'000, 100'000);
  ASSERT_EQ(w.size(), 10u);
  double sum_bits = 0;
  for (double bps : w) sum_bits += bps * 0.1;
  EXPECT_NEAR(sum_bits, static_cast<double>(total), 1e-6 * static_cast<double>(total));
}

TEST(Throughput, PartialWindowScaled) {
  std::vector<Delivery> d{{10, 1000}, {120'000, 500}};
  auto w = windowed_throughput(d, 0, 150'000, 100'000);
  ASSERT_EQ(w.size(), 2u);
  EXPECT_DOUBLE_EQ(w[0], 10'000);
  EXPECT_DOUBLE_EQ(w[1], 10'000);
}

TEST(Percentile, InterpolatesAndIsMonotone) {
  EXPECT_DOUBLE_EQ(percentile({1, 2, 3, 4, 5}, 50), 3);
  EXPECT_DOUBLE_EQ(percentile({1, 2}, 50), 1.5);
  EXPECT_DOUBLE_EQ(percentile({7}, 95), 7);
  std::mt19937 gen(1);
  std::vector<double> v(777);
  for (double& x : v) x = gen() % 1000;
  double prev = -1;
  for (double q = 0; q <= 100; q += 2.5) {
    const double p = percentile(v, q);
    EXPECT_GE(p, prev);
    prev = p;
  }
  EXPECT_DOUBLE_EQ(percentile(v, 0), *std::min_element(v.begin(), v.end()));
  EXPECT_DOUBLE_EQ(percentile(v, 100), *std::max_element(v.begin(), v.end()));
}

TEST(TimeInState, Fractions) {
  std::vector<PhaseChange> c{{0, false}, {2000, true}, {6000, false}, {9000, true}};
  auto f = time_in_state(c, 0, 10000);
  EXPECT_DOUBLE_EQ(f.internet, 0.5);
  EXPECT_DOUBLE_EQ(f.wireless, 0.5);
  auto g = time_in_state(c, 3000, 5000);
  EXPECT_DOUBLE_EQ(g.internet, 1.0);
  EXPECT_TRUE(is_internet_phase("PreDrain"));
  EXPECT_TRUE(is_internet_phase("InternetProbeBW"));
  EXPECT_FALSE(is_internet_phase("WirelessCA"));
}

TEST(Csv, TimeFormatting) {
  EXPECT_EQ(csv::ms_from_us(12345), "12.345");
  EXPECT_EQ(csv::ms_from_us(7), "0.007");
  EXPECT_EQ(csv::us_from_ms("12.345"), 12345);
  EXPECT_EQ(csv::us_from_ms("3"), 3000);
  EXPECT_EQ(std::stod(csv::num(0.1)), 0.1);
}

TEST(Simulation, EmptyScenarioHasNoPackets) {
  Scenario s = load_scenario(fs::path(PBECC_SCENARIO_DIR) / "empty.yaml");
  SimulationResult r = run_scenario(s);
  EXPECT_TRUE(r.flows.empty());
  Json m = compute_metrics(r);
  EXPECT_TRUE(m["flows"].empty());
  EXPECT_DOUBLE_EQ(m["cells"][0]["mean_idle_prbs"].get<double>(), 100.0);
}

TEST(Simulation, HarqReorderDelays) {
  Scenario s = load_scenario(fs::path(PBECC_SCENARIO_DIR) / "harq_reorder.yaml");
  SimulationResult r = run_scenario(s);
  ASSERT_EQ(r.flows.size(), 1u);
  std::map<double, int> by_delay;
  for (const PacketRecord& p : r.flows[0].packets) {
    if (p.delivered_us) by_delay[p.harq_delay_ms] += 1;
  }
  for (int d = 1; d <= 8; ++d) EXPECT_EQ(by_delay[d], 1) << "delay " << d;
  EXPECT_EQ(by_delay.rbegin()->first, 8.0);
}

TEST(Simulation, SameSeedSameResult) {
  Scenario s = parse_scenario(kMinimal + "  - {id: 2, algorithm: bbr}\n");
  Json a = compute_metrics(run_scenario(s));
  Json b = compute_metrics(run_scenario(s));
  EXPECT_EQ(dump(a), dump(b));
  Json c = compute_metrics(run_scenario(s, 4));
  EXPECT_EQ(c["seed"].get<std::uint64_t>(), 4u);
}

TEST(Simulation, ParallelMatchesSerial) {
  Scenario s = parse_scenario(kMinimal);
  std::vector<std::pair<Scenario, std::uint64_t>> jobs{{s, 1}, {s, 2}, {s, 3}};
  auto par = run_parallel(jobs, 3);
  ASSERT_EQ(par.size(), 3u);
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    EXPECT_EQ(dump(compute_metrics(par[i])), dump(compute_metrics(run_scenario(s, jobs[i].second))));
  }
}

TEST(Simulation, PacketsNeverDeliveredBeforeSent) {
  Scenario s = load_scenario(fs::path(PBECC_SCENARIO_DIR) / "tcp_friendliness.yaml");
  s.duration_ms = 4000;
  s.fairness_start_ms.reset();
  s.fairness_end_ms.reset();
  SimulationResult r = run_scenario(s);
  for (const FlowResult& f : r.flows) {
    for (std::size_t i = 0; i < f.packets.size(); ++i) {
      const PacketRecord& p = f.packets[i];
      ASSERT_EQ(p.seq, i);
      if (p.delivered_us) {
        ASSERT_GE(*p.delivered_us - p.sent_us, 20'000) << "flow " << f.spec.id;
        ASSERT_FALSE(p.dropped);
      }
    }
  }
  for (const AllocationRow& a : r.allocations) {
    ASSERT_GE(a.idle_prbs, 0);
    ASSERT_LE(a.prbs, 100);
  }
}

TEST(Io, ReportRecomputesMetricsJson) {
  const fs::path dir = temp_dir("report");
  Scenario s = load_scenario(fs::path(PBECC_SCENARIO_DIR) / "fig2_ca_trigger.yaml");
  write_run(dir, run_scenario(s));
  for (const char* f : {"metrics.json", "packets.csv", "allocations.csv", "sender.csv"}) {
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  }
  EXPECT_EQ(dump(report(dir)), slurp(dir / "metrics.json"));
  fs::remove_all(dir);
}

TEST(Io, CsvHeadersMatchColumns) {
  const fs::path dir = temp_dir("headers");
  write_run(dir, run_scenario(parse_scenario(kMinimal)));
  auto first_line = [&](const char* f) {
    std::ifstream in(dir / f);
    std::string line;
    std::getline(in, line);
    return line;
  };
  EXPECT_EQ(first_line("packets.csv"), "flow_id,seq,sent_us,delivered_us,owd_ms,harq_delay_ms,dropped");
  EXPECT_EQ(first_line("allocations.csv"), "time,cell,user,prbs,rw_bits_per_prb,ndi,idle_prbs");
  EXPECT_EQ(first_line("sender.csv"), "flow_id,time,phase,pacing_rate,cwnd,btlbw,rtprop,c_f");
  fs::remove_all(dir);
}

TEST(Io, CorruptTraceRejected) {
  const fs::path dir = temp_dir("corrupt");
  write_run(dir, run_scenario(parse_scenario(kMinimal)));
  {
    std::ofstream out(dir / "packets.csv", std::ios::app);
    out << "1,2,3\n";
  }
  EXPECT_THROW(report(dir), TraceError);
  EXPECT_THROW(report(dir / "missing"), TraceError);
  fs::remove_all(dir);
}
