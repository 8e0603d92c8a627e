#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <vector>

#include "pbecc/mac/base_station.hpp"

using namespace pbecc;
using namespace pbecc::mac;

namespace {

constexpr int kHuge = 1'000'000;

int sum(const std::vector<int>& v) { return std::accumulate(v.begin(), v.end(), 0); }

}  // namespace

TEST(WaterFill, EqualSplit) {
  std::vector<int> d{kHuge, kHuge};
  EXPECT_EQ(water_fill(100, d), (std::vector<int>{50, 50}));
}

TEST(WaterFill, SmallDemandSatisfiedRestToOther) {
  std::vector<int> d{20, kHuge};
  EXPECT_EQ(water_fill(100, d), (std::vector<int>{20, 80}));
}

TEST(WaterFill, DemandLimitedLeavesIdle) {
  std::vector<int> d{30};
  auto a = water_fill(100, d);
  EXPECT_EQ(a, (std::vector<int>{30}));
  EXPECT_EQ(100 - sum(a), 70);
}

TEST(WaterFill, RemainderRotates) {
  std::vector<int> d{kHuge, kHuge, kHuge};
  EXPECT_EQ(water_fill(100, d, 0), (std::vector<int>{34, 33, 33}));
  EXPECT_EQ(water_fill(100, d, 1), (std::vector<int>{33, 34, 33}));
  EXPECT_EQ(water_fill(100, d, 2), (std::vector<int>{33, 33, 34}));
}

// Max-min fairness over integers: nobody is over its demand, nothing is left
// idle while someone wants more, and an unsatisfied user is never more than
// one PRB behind anybody else.
TEST(WaterFill, PropertiesOnRandomDemands) {
  std::mt19937 gen(7);
  for (int trial = 0; trial < 2000; ++trial) {
    const int n = 1 + static_cast<int>(gen() % 8);
    const int avail = static_cast<int>(gen() % 120);
    std::vector<int> d(n);
    for (int& x : d) x = static_cast<int>(gen() % 60);
    auto a = water_fill(avail, d, gen() % 8);
    ASSERT_EQ(a.size(), d.size());
    const int demand = sum(d);
    EXPECT_EQ(sum(a), std::min(avail, demand));
    for (int i = 0; i < n; ++i) {
      ASSERT_GE(a[i], 0);
      ASSERT_LE(a[i], d[i]);
      if (a[i] < d[i]) {
        for (int j = 0; j < n; ++j) ASSERT_GE(a[i] + 1, a[j]) << "trial " << trial;
      }
    }
  }
}

TEST(Schedule, RetransmissionsThenBackgroundThenData) {
  std::vector<Reservation> retx{{1, 10, 1000, false}};
  std::vector<Reservation> bg{{99, 4, 1000, true}};
  std::vector<DataDemand> data{{1, kHuge, 1000}, {2, kHuge, 800}};
  auto a = schedule_subframe(0, 100, 0, retx, bg, data);
  ASSERT_EQ(a.grants.size(), 4u);
  EXPECT_EQ(a.grants[0].user, 1u);
  EXPECT_FALSE(a.grants[0].new_data);
  EXPECT_EQ(a.grants[0].prbs, 10);
  EXPECT_EQ(a.grants[1].user, 99u);
  EXPECT_EQ(a.grants[1].prbs, 4);
  EXPECT_EQ(a.grants[2].prbs + a.grants[3].prbs, 86);
  EXPECT_EQ(a.grants[2].prbs, 43);
  EXPECT_DOUBLE_EQ(a.grants[3].rw_bits_per_prb, 800);
  EXPECT_EQ(a.idle_prbs(), 0);
}

TEST(Schedule, OverlappingBackgroundTruncatedToResidual) {
  std::vector<Reservation> bg{{100, 60, 1000, true}, {101, 60, 1000, true}};
  auto a = schedule_subframe(0, 100, 0, {}, bg, {});
  ASSERT_EQ(a.grants.size(), 2u);
  EXPECT_EQ(a.grants[0].prbs, 60);
  EXPECT_EQ(a.grants[1].prbs, 40);
  EXPECT_EQ(a.idle_prbs(), 0);
}

TEST(Schedule, NoGrantsMeansAllIdle) {
  auto a = schedule_subframe(0, 50, 3, {}, {}, {});
  EXPECT_TRUE(a.grants.empty());
  EXPECT_EQ(a.idle_prbs(), 50);
}

TEST(TbError, ZeroBerNeverFails) {
  sim::Rng rng(1);
  EXPECT_EQ(tb_error_probability(0.0, 1e6), 0.0);
  for (int i = 0; i < 10000; ++i) ASSERT_EQ(transmit_tb(0.0, 1e5, rng), TbOutcome::Ok);
}

TEST(TbError, MatchesClosedForm) {
  // Independent oracle: long double power.
  auto oracle = [](long double p, long double l) { return 1.0L - std::pow(1.0L - p, l); };
  EXPECT_NEAR(tb_error_probability(1e-6, 10000), static_cast<double>(oracle(1e-6L, 10000)), 1e-12);
  EXPECT_NEAR(tb_error_probability(1e-6, 10000), 0.00995, 0.00001);
  EXPECT_NEAR(tb_error_probability(3e-6, 30000), static_cast<double>(oracle(3e-6L, 30000)), 1e-12);
  EXPECT_NEAR(tb_error_probability(3e-6, 30000), 0.0861, 0.0001);
  EXPECT_THROW(tb_error_probability(1.0, 10), std::invalid_argument);
}

TEST(TbError, MonotoneInBerAndSize) {
  double prev = 0.0;
  for (double p = 1e-7; p < 1e-4; p *= 1.5) {
    const double e = tb_error_probability(p, 10000);
    EXPECT_GT(e, prev);
    prev = e;
  }
  EXPECT_LT(tb_error_probability(5e-6, 1000), tb_error_probability(5e-6, 2000));
}

TEST(Harq, AttemptsEveryEightSubframes) {
  HarqProcess p{1, 0, 1, 100, 10, 1000, {}};
  EXPECT_EQ(p.record(TbOutcome::Failed), HarqProcess::Status::Pending);
  EXPECT_EQ(p.next_attempt_subframe(), 108);
  EXPECT_EQ(p.record(TbOutcome::Failed), HarqProcess::Status::Pending);
  EXPECT_EQ(p.next_attempt_subframe(), 116);
  EXPECT_EQ(p.record(TbOutcome::Ok), HarqProcess::Status::Delivered);
  EXPECT_EQ(p.retransmissions(), 2);
}

TEST(Harq, DropsAfterMaxRetransmissions) {
  HarqProcess p{1, 0, 1, 0, 10, 1000, {}};
  for (int i = 0; i < kMaxRetransmissions; ++i) EXPECT_EQ(p.record(TbOutcome::Failed), HarqProcess::Status::Pending);
  EXPECT_EQ(p.record(TbOutcome::Failed), HarqProcess::Status::Dropped);
}

namespace {

// Drives a reorder buffer with one TB per subframe from `first` on. TB
// `failing` is resolved after `failures` HARQ rounds; every other TB decodes
// first time. Returns delay per subframe.
std::map<std::int64_t, int> run_reorder(std::int64_t first, std::int64_t failing, int failures, int subframes) {
  ReorderBuffer rb;
  std::map<std::int64_t, int> delays;
  for (std::int64_t sf = first; sf < first + subframes; ++sf) {
    rb.add(sf, static_cast<std::uint64_t>(sf),
           sf == failing ? ReorderBuffer::State::Pending : ReorderBuffer::State::Delivered);
    if (sf == failing + kHarqRoundTripSubframes * failures) rb.resolve(static_cast<std::uint64_t>(failing), true);
    for (const auto& r : rb.release(sf)) delays[r.subframe] = r.delay_ms();
  }
  return delays;
}

}  // namespace

TEST(Reorder, SingleFailureDelaysFollowingBlocks) {
  auto delays = run_reorder(0, 10, 1, 30);
  ASSERT_EQ(delays.size(), 30u);
  for (std::int64_t sf = 0; sf < 30; ++sf) {
    const int expected = (sf >= 10 && sf <= 18) ? static_cast<int>(18 - sf) : 0;
    EXPECT_EQ(delays[sf], expected) << "subframe " << sf;
  }
  EXPECT_EQ(delays[10], 8);
  EXPECT_EQ(delays[11], 7);
  EXPECT_EQ(delays[17], 1);
  EXPECT_EQ(delays[18], 0);
}

TEST(Reorder, NoFailuresNoDelay) {
  ReorderBuffer rb;
  for (std::int64_t sf = 0; sf < 20; ++sf) {
    rb.add(sf, static_cast<std::uint64_t>(sf), ReorderBuffer::State::Delivered);
    auto out = rb.release(sf);
    ASSERT_EQ(out.size(), 1u);
    EXPECT_EQ(out[0].delay_ms(), 0);
  }
}

TEST(Reorder, DoubleFailureBlocksTwoRounds) {
  auto delays = run_reorder(0, 5, 2, 40);
  EXPECT_EQ(delays[5], 16);
  for (std::int64_t sf = 6; sf <= 21; ++sf) EXPECT_EQ(delays[sf], 21 - sf) << "subframe " << sf;
  EXPECT_EQ(delays[22], 0);
}

TEST(Reorder, ContractViolations) {
  ReorderBuffer rb;
  rb.add(5, 1, ReorderBuffer::State::Pending);
  EXPECT_THROW(rb.add(4, 2, ReorderBuffer::State::Delivered), std::logic_error);
  EXPECT_THROW(rb.resolve(99, true), std::logic_error);
  rb.resolve(1, false);
  EXPECT_THROW(rb.resolve(1, true), std::logic_error);
  auto out = rb.release(13);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_FALSE(out[0].delivered);
}

TEST(Reorder, BlockingSubframe) {
  ReorderBuffer rb;
  rb.add(1, 1, ReorderBuffer::State::Delivered);
  rb.add(2, 2, ReorderBuffer::State::Pending);
  rb.add(3, 3, ReorderBuffer::State::Pending);
  EXPECT_EQ(rb.blocking_subframe(), 2);
  EXPECT_EQ(rb.release(3).size(), 1u);
  EXPECT_EQ(rb.held(), 2u);
}

namespace {

CaSample busy(int user, int capacity, double arrivals, double cap_without) {
  return CaSample{user, capacity, arrivals, cap_without};
}

}  // namespace

TEST(CarrierAggregation, NeverAboveThresholdLeavesCellsAlone) {
  CaController ca({0, 1}, {});
  for (int i = 0; i < 2000; ++i) EXPECT_FALSE(ca.update(busy(80, 100, 0, 0)));
  EXPECT_EQ(ca.active_count(), 1u);
  EXPECT_TRUE(ca.is_active(0));
  EXPECT_FALSE(ca.is_active(1));
}

TEST(CarrierAggregation, ActivatesAfterFullWindow) {
  CaController ca({0, 1}, {});
  for (int i = 0; i < 99; ++i) EXPECT_FALSE(ca.update(busy(100, 100, 0, 0)));
  auto change = ca.update(busy(100, 100, 0, 0));
  ASSERT_TRUE(change);
  EXPECT_EQ(change->cell, 1u);
  EXPECT_TRUE(change->activated);
  EXPECT_EQ(ca.active_cells(), (std::vector<CellId>{0, 1}));
}

TEST(CarrierAggregation, DeactivatesWhenDemandFitsWithoutTopCell) {
  CaThresholds th;
  CaController ca({0, 1}, th);
  for (int i = 0; i < th.activation_window; ++i) ca.update(busy(100, 100, 0, 0));
  ASSERT_EQ(ca.active_count(), 2u);
  // Demand at 90% of the primary's capacity: stays.
  for (int i = 0; i < 1000; ++i) EXPECT_FALSE(ca.update(busy(50, 150, 900, 1000)));
  // Demand at 50%: drops after one deactivation window.
  std::optional<CaChange> change;
  int steps = 0;
  while (!change && steps < 2000) {
    change = ca.update(busy(30, 150, 500, 1000));
    ++steps;
  }
  ASSERT_TRUE(change);
  EXPECT_FALSE(change->activated);
  EXPECT_EQ(change->cell, 1u);
  EXPECT_LE(steps, th.deactivation_window);
  EXPECT_EQ(ca.active_count(), 1u);
}

TEST(CarrierAggregation, SingleCellNeverChanges) {
  CaController ca({3}, {});
  for (int i = 0; i < 1000; ++i) EXPECT_FALSE(ca.update(busy(100, 100, 1e9, 0)));
  EXPECT_THROW(CaController({}, {}), std::invalid_argument);
}

namespace {

BaseStation station(std::vector<CellConfig> cells, double overhead = 0.0) {
  BaseStationConfig cfg;
  cfg.header_overhead = overhead;
  return BaseStation(std::move(cells), cfg, 1);
}

Packet data_packet(std::uint64_t seq) {
  Packet p;
  p.flow_id = 1;
  p.seq = seq;
  return p;
}

}  // namespace

TEST(BaseStation, BackloggedUserTakesWholeCell) {
  auto bs = station({{0, 100, 1000, 0.0}});
  bs.add_user(1, {0});
  for (std::uint64_t s = 0; s < 50; ++s) ASSERT_TRUE(bs.enqueue(data_packet(s), 1));
  auto r = bs.run_subframe(0);
  ASSERT_EQ(r.allocations.size(), 1u);
  EXPECT_EQ(r.allocations[0].allocated_prbs(), 100);
  // 100 kbit per subframe: about 8 whole packets.
  EXPECT_EQ(r.delivered.size(), 8u);
  EXPECT_EQ(bs.backlog_bits(1), 50 * 12000 - 100000);
}

TEST(BaseStation, HeaderOverheadShrinksPayload) {
  auto bs = station({{0, 100, 1000, 0.0}}, 0.1);
  bs.add_user(1, {0});
  for (std::uint64_t s = 0; s < 50; ++s) bs.enqueue(data_packet(s), 1);
  bs.run_subframe(0);
  EXPECT_EQ(bs.backlog_bits(1), 50 * 12000 - 90000);
}

TEST(BaseStation, DemandLimitedGrantShrinks) {
  auto bs = station({{0, 100, 1000, 0.0}});
  bs.add_user(1, {0});
  bs.enqueue(data_packet(0), 1);
  auto r = bs.run_subframe(0);
  ASSERT_EQ(r.allocations[0].grants.size(), 1u);
  EXPECT_EQ(r.allocations[0].grants[0].prbs, 12);
  EXPECT_EQ(r.allocations[0].idle_prbs(), 88);
  ASSERT_EQ(r.delivered.size(), 1u);
  EXPECT_EQ(r.delivered[0].harq_delay_ms, 0.0);
}

TEST(BaseStation, OneSubframeBackgroundBurstAppearsOnce) {
  auto bs = station({{0, 100, 1000, 0.0}});
  bs.add_background(BackgroundProfile{0, 1'000'000, 5, 1, 4});
  int seen = 0;
  for (std::int64_t sf = 0; sf < 20; ++sf) {
    auto r = bs.run_subframe(sf);
    for (const Grant& g : r.allocations[0].grants) {
      if (g.user == 1'000'000) {
        ++seen;
        EXPECT_EQ(sf, 5);
        EXPECT_EQ(g.prbs, 4);
      }
    }
  }
  EXPECT_EQ(seen, 1);
}

TEST(BaseStation, PersistentBackgroundCompetes) {
  auto bs = station({{0, 100, 1000, 0.0}});
  bs.add_user(1, {0});
  bs.add_background(BackgroundProfile{0, 1'000'000, 0, 100, 20});
  for (std::uint64_t s = 0; s < 1000; ++s) bs.enqueue(data_packet(s), 1);
  for (std::int64_t sf = 0; sf < 100; ++sf) {
    auto r = bs.run_subframe(sf);
    ASSERT_EQ(r.allocations[0].grants.size(), 2u);
    EXPECT_EQ(r.allocations[0].grants[0].prbs, 20);
    EXPECT_EQ(r.allocations[0].grants[1].prbs, 80);
  }
}

TEST(BaseStation, ForcedFailureRetransmitsAfterEightSubframes) {
  auto bs = station({{0, 100, 1000, 0.0}});
  bs.add_user(1, {0});
  bs.force_failure(ForcedFailure{0, 1, 3, 1});
  std::uint64_t seq = 0;
  std::map<std::uint64_t, double> harq;
  for (std::int64_t sf = 0; sf < 30; ++sf) {
    bs.enqueue(data_packet(seq++), 1);
    auto r = bs.run_subframe(sf);
    if (sf == 11) {
      bool retx = false;
      for (const Grant& g : r.allocations[0].grants) retx |= !g.new_data;
      EXPECT_TRUE(retx);
    }
    for (const auto& d : r.delivered) harq[d.packet.seq] = d.harq_delay_ms;
  }
  ASSERT_EQ(harq.size(), 30u);
  for (std::uint64_t s = 0; s < 30; ++s) {
    const double expected = (s >= 3 && s <= 11) ? static_cast<double>(11 - s) : 0.0;
    EXPECT_EQ(harq[s], expected) << "seq " << s;
  }
}

TEST(BaseStation, ExhaustedHarqLosesPacket) {
  auto bs = station({{0, 100, 1000, 0.0}});
  bs.add_user(1, {0});
  bs.force_failure(ForcedFailure{0, 1, 0, 4});
  bs.enqueue(data_packet(0), 1);
  std::size_t lost = 0, delivered = 0;
  for (std::int64_t sf = 0; sf < 40; ++sf) {
    auto r = bs.run_subframe(sf);
    lost += r.lost.size();
    delivered += r.delivered.size();
    if (!r.lost.empty()) {
      EXPECT_EQ(sf, 24);
    }
  }
  EXPECT_EQ(lost, 1u);
  EXPECT_EQ(delivered, 0u);
}

TEST(BaseStation, BufferTailDrop) {
  BaseStationConfig cfg;
  cfg.user_buffer_bits = 24000;
  BaseStation bs({{0, 100, 1000, 0.0}}, cfg, 1);
  bs.add_user(1, {0});
  EXPECT_TRUE(bs.enqueue(data_packet(0), 1));
  EXPECT_TRUE(bs.enqueue(data_packet(1), 1));
  EXPECT_FALSE(bs.enqueue(data_packet(2), 1));
  EXPECT_EQ(bs.buffer_drops(1), 1u);
}

TEST(BaseStation, SecondaryCellActivatesUnderLoad) {
  auto bs = station({{0, 50, 720, 0.0}, {1, 50, 720, 0.0}});
  bs.add_user(1, {0, 1});
  std::uint64_t seq = 0;
  std::int64_t activated_at = -1;
  for (std::int64_t sf = 0; sf < 300; ++sf) {
    // 40 Mbit/s offered against 36 Mbit/s of primary capacity.
    for (int k = 0; k < 3 + (sf % 3 == 0 ? 1 : 0); ++k) bs.enqueue(data_packet(seq++), 1);
    auto r = bs.run_subframe(sf);
    for (const auto& e : r.ca_events) {
      if (e.activated && activated_at < 0) activated_at = sf;
    }
  }
  EXPECT_GE(activated_at, 99);
  EXPECT_LE(activated_at, 150);
  EXPECT_EQ(bs.active_cells(1).size(), 2u);
}

TEST(BaseStation, PacketConservation) {
  BaseStationConfig cfg;
  cfg.user_buffer_bits = 200'000;
  BaseStation bs({{0, 100, 1000, 5e-6}}, cfg, 9);
  bs.add_user(1, {0});
  bs.add_user(2, {0});
  std::mt19937 gen(4);
  std::uint64_t accepted = 0, seq = 0, out = 0;
  for (std::int64_t sf = 0; sf < 3000; ++sf) {
    const int n = sf < 2500 ? static_cast<int>(gen() % 20) : 0;
    for (int k = 0; k < n; ++k) {
      Packet p = data_packet(seq++);
      if (bs.enqueue(p, 1 + static_cast<UserId>(gen() % 2))) ++accepted;
    }
    auto r = bs.run_subframe(sf);
    ASSERT_LE(r.allocations[0].allocated_prbs(), 100);
    out += r.delivered.size() + r.lost.size();
  }
  EXPECT_EQ(out, accepted);
}
