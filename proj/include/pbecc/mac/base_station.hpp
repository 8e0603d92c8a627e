#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <tuple>
#include <unordered_map>
#include <utility>
#include <vector>

#include "pbecc/mac/carrier_aggregation.hpp"
#include "pbecc/mac/harq.hpp"
#include "pbecc/mac/reorder.hpp"
#include "pbecc/mac/scheduler.hpp"
#include "pbecc/mac/tb_error.hpp"
#include "pbecc/mac/types.hpp"
#include "pbecc/sim/packet.hpp"
#include "pbecc/sim/rng.hpp"
#include "pbecc/sim/time.hpp"

namespace pbecc::mac {

struct BaseStationConfig {
  std::int64_t user_buffer_bits = 32'000'000;  // per-user drop-tail buffer
  // Share of every TB taken by MAC/RLC/PDCP headers and similar overhead.
  double header_overhead = 0.068;
  CaThresholds ca;
};

// A scripted user holding a fixed PRB reservation, e.g. a control-traffic
// burst (4 PRBs for one subframe) or a persistent competing data user.
struct BackgroundProfile {
  CellId cell = 0;
  UserId user = 0;
  std::int64_t start_subframe = 0;
  int active_subframes = 1;
  int prbs = 4;
};

// Forces the transport block sent to `user` in `cell` at `subframe` to fail
// its first `failures` attempts.
struct ForcedFailure {
  CellId cell = 0;
  UserId user = 0;
  std::int64_t subframe = 0;
  int failures = 1;
};

struct DeliveredPacket {
  Packet packet;
  std::int64_t release_subframe = 0;
  double harq_delay_ms = 0.0;
};

struct CaEvent {
  std::int64_t subframe = 0;
  UserId user = 0;
  CellId cell = 0;
  bool activated = false;
};

struct SubframeResult {
  std::vector<SubframeAllocation> allocations;  // one per cell, cell order
  std::vector<DeliveredPacket> delivered;
  std::vector<Packet> lost;                     // HARQ exhausted
  std::vector<CaEvent> ca_events;
};

// Downlink of one or more component carriers with a separate buffer per user.
// Each subframe: HARQ retransmissions, background reservations, then an
// equal-share water-fill of data users. A user aggregated over several active
// cells has its backlog split across them in proportion to the PRBs each cell
// could give it.
class BaseStation {
 public:
  BaseStation(std::vector<CellConfig> cells, BaseStationConfig config, std::uint64_t seed)
      : cells_(std::move(cells)), config_(config), rng_(seed) {
    if (cells_.empty()) throw std::invalid_argument("base station needs at least one cell");
    if (!(config_.header_overhead >= 0.0 && config_.header_overhead < 1.0)) {
      throw std::invalid_argument("header overhead must be in [0, 1)");
    }
    for (std::size_t i = 0; i < cells_.size(); ++i) {
      cells_[i].validate();
      if (!cell_index_.emplace(cells_[i].id, i).second) {
        throw std::invalid_argument("duplicate cell id " + std::to_string(cells_[i].id));
      }
    }
  }

  void add_user(UserId user, std::vector<CellId> aggregated_cells, std::optional<double> ber = {}) {
    if (aggregated_cells.empty()) throw std::invalid_argument("user needs at least one cell");
    for (CellId c : aggregated_cells) index_of(c);
    if (users_.count(user)) throw std::invalid_argument("duplicate user " + std::to_string(user));
    UserState st;
    st.ber = ber.value_or(cell(aggregated_cells.front()).ber);
    if (!(st.ber >= 0.0 && st.ber < 1.0)) throw std::invalid_argument("ber must be in [0, 1)");
    st.ca = std::make_unique<CaController>(std::move(aggregated_cells), config_.ca);
    users_.emplace(user, std::move(st));
  }

  const CellConfig& cell(CellId id) const { return cells_[index_of(id)]; }
  const std::vector<CellConfig>& cells() const { return cells_; }

  // Cell-wide rate when `user` is empty, else a per-user override.
  void set_rate(CellId c, std::optional<UserId> user, double rw_bits_per_prb) {
    if (!(rw_bits_per_prb > 0)) throw std::invalid_argument("rw_bits_per_prb must be > 0");
    if (user) {
      rate_override_[{c, *user}] = rw_bits_per_prb;
    } else {
      cells_[index_of(c)].rw_bits_per_prb = rw_bits_per_prb;
    }
  }

  double rate(CellId c, UserId user) const {
    auto it = rate_override_.find({c, user});
    return it != rate_override_.end() ? it->second : cell(c).rw_bits_per_prb;
  }

  // Payload bits one PRB carries for `user` after header overhead.
  double payload_rate(CellId c, UserId user) const { return rate(c, user) * (1.0 - config_.header_overhead); }

  void set_ber(UserId user, double ber) {
    if (!(ber >= 0.0 && ber < 1.0)) throw std::invalid_argument("ber must be in [0, 1)");
    state(user).ber = ber;
  }
  double ber(UserId user) const { return state(user).ber; }

  void add_background(const BackgroundProfile& profile) {
    const CellConfig& c = cell(profile.cell);
    if (profile.prbs <= 0 || profile.prbs > c.prbs) {
      throw std::invalid_argument("background profile PRBs must be in (0, P_cell]");
    }
    if (profile.active_subframes <= 0) throw std::invalid_argument("background T_a must be > 0");
    background_.push_back(profile);
  }

  void force_failure(const ForcedFailure& f) {
    forced_[{f.cell, f.user, f.subframe}] = f.failures;
  }

  // Accepts a packet into the user's buffer; false on tail drop.
  bool enqueue(const Packet& pkt, UserId user) {
    UserState& st = state(user);
    if (st.backlog_bits + pkt.size_bits > config_.user_buffer_bits) {
      ++st.buffer_drops;
      return false;
    }
    const std::uint64_t uid = next_packet_uid_++;
    packets_.emplace(uid, InFlight{pkt, pkt.size_bits, 0, -1, false});
    st.queue.push_back(Queued{uid, pkt.size_bits});
    st.backlog_bits += pkt.size_bits;
    st.arrival_bits += static_cast<double>(pkt.size_bits);
    return true;
  }

  std::int64_t backlog_bits(UserId user) const { return state(user).backlog_bits; }
  std::uint64_t buffer_drops(UserId user) const { return state(user).buffer_drops; }
  std::vector<CellId> active_cells(UserId user) const { return state(user).ca->active_cells(); }
  const std::vector<CellId>& aggregated_cells(UserId user) const { return state(user).ca->cells(); }

  SubframeResult run_subframe(std::int64_t sf) {
    SubframeResult result;
    const std::size_t ncell = cells_.size();

    // HARQ retransmissions due now, grouped per cell.
    std::vector<std::vector<HarqProcess>> retx(ncell);
    if (auto it = harq_.find(sf); it != harq_.end()) {
      for (HarqProcess& p : it->second) retx[index_of(p.cell)].push_back(std::move(p));
      harq_.erase(it);
    }
    std::vector<std::vector<Reservation>> retx_res(ncell), bg_res(ncell);
    std::vector<int> free(ncell);
    for (std::size_t i = 0; i < ncell; ++i) {
      int left = cells_[i].prbs;
      for (const HarqProcess& p : retx[i]) {
        retx_res[i].push_back(Reservation{p.user, p.prbs, p.rw_bits_per_prb, false});
        left -= std::min(left, p.prbs);
      }
      for (const BackgroundProfile& b : background_) {
        if (index_of(b.cell) != i || sf < b.start_subframe || sf >= b.start_subframe + b.active_subframes) continue;
        bg_res[i].push_back(Reservation{b.user, b.prbs, cells_[i].rw_bits_per_prb, true});
        left -= std::min(left, b.prbs);
      }
      free[i] = left;
    }
    std::erase_if(background_, [sf](const BackgroundProfile& b) {
      return b.start_subframe + b.active_subframes <= sf + 1;
    });

    // Data demands per cell after the proportional split.
    std::vector<std::vector<DataDemand>> demands(ncell);
    split_demands(free, demands);

    // Schedule and build transport blocks.
    std::map<std::pair<UserId, CellId>, bool> touched;
    std::map<UserId, int> user_prbs;
    for (std::size_t i = 0; i < ncell; ++i) {
      const CellConfig& c = cells_[i];
      SubframeAllocation alloc = schedule_subframe(c.id, c.prbs, sf, retx_res[i], bg_res[i], demands[i]);

      std::size_t retx_idx = 0;
      std::vector<Grant> kept;
      kept.reserve(alloc.grants.size());
      for (Grant g : alloc.grants) {
        if (!g.new_data) {
          // Failed TBs of one subframe never exceed P_cell, so every
          // retransmission due now fits and keeps its reservation order.
          HarqProcess& proc = retx[i].at(retx_idx++);
          attempt_retransmission(std::move(proc));
          touched[{g.user, c.id}] = true;
          user_prbs[g.user] += g.prbs;
          kept.push_back(g);
          continue;
        }
        auto ust = users_.find(g.user);
        if (ust == users_.end()) {  // background user: no payload
          kept.push_back(g);
          continue;
        }
        if (!fill_new_tb(ust->second, g, c.id, sf)) continue;
        touched[{g.user, c.id}] = true;
        user_prbs[g.user] += g.prbs;
        kept.push_back(g);
      }
      alloc.grants = std::move(kept);
      result.allocations.push_back(std::move(alloc));
    }

    // Reorder buffers release at the end of the subframe.
    for (const auto& [key, unused] : touched) {
      (void)unused;
      release(key.first, key.second, sf, result);
    }

    // Carrier aggregation bookkeeping.
    for (auto& [uid, st] : users_) {
      CaController& ca = *st.ca;
      if (ca.cells().size() > 1) {
        CaSample s;
        s.user_prbs = user_prbs.count(uid) ? user_prbs[uid] : 0;
        auto active = ca.active_cells();
        for (std::size_t k = 0; k < active.size(); ++k) {
          const CellConfig& c = cell(active[k]);
          s.active_capacity_prbs += c.prbs;
          if (k + 1 < active.size()) s.capacity_without_highest_bits += payload_rate(c.id, uid) * c.prbs;
        }
        s.arrival_bits = st.arrival_bits;
        if (auto change = ca.update(s)) {
          result.ca_events.push_back(CaEvent{sf, uid, change->cell, change->activated});
        }
      }
      st.arrival_bits = 0.0;
    }
    return result;
  }

 private:
  struct Queued {
    std::uint64_t uid;
    std::int64_t bits_left;
  };

  struct InFlight {
    Packet packet;
    std::int64_t unassigned_bits;
    int fragments_outstanding;
    std::int64_t last_subframe;  // latest original subframe among its TBs
    bool lost;
  };

  struct Fragment {
    std::uint64_t uid;
    std::int64_t bits;
  };

  struct TransportBlock {
    CellId cell;
    UserId user;
    std::int64_t subframe;
    std::vector<Fragment> fragments;
  };

  struct UserState {
    double ber = 0.0;
    std::unique_ptr<CaController> ca;
    std::deque<Queued> queue;
    std::int64_t backlog_bits = 0;
    double arrival_bits = 0.0;
    std::uint64_t buffer_drops = 0;
    std::map<CellId, ReorderBuffer> reorder;
  };

  std::size_t index_of(CellId id) const {
    auto it = cell_index_.find(id);
    if (it == cell_index_.end()) throw std::invalid_argument("unknown cell id " + std::to_string(id));
    return it->second;
  }

  UserState& state(UserId u) {
    auto it = users_.find(u);
    if (it == users_.end()) throw std::invalid_argument("unknown user " + std::to_string(u));
    return it->second;
  }
  const UserState& state(UserId u) const {
    auto it = users_.find(u);
    if (it == users_.end()) throw std::invalid_argument("unknown user " + std::to_string(u));
    return it->second;
  }

  static int prbs_for(double bits, double rw) {
    return static_cast<int>(std::ceil(bits / rw - 1e-9));
  }

  void split_demands(const std::vector<int>& free, std::vector<std::vector<DataDemand>>& demands) {
    const std::size_t ncell = cells_.size();
    struct Want {
      UserId user;
      std::vector<std::size_t> cells;
    };
    std::vector<Want> wants;
    for (const auto& [uid, st] : users_) {
      if (st.backlog_bits <= 0) continue;
      Want w{uid, {}};
      for (CellId c : st.ca->active_cells()) w.cells.push_back(index_of(c));
      wants.push_back(std::move(w));
    }
    if (wants.empty()) return;

    // Capacity each user could get per cell if its whole backlog went there.
    std::vector<std::map<UserId, int>> cap(ncell);
    for (std::size_t i = 0; i < ncell; ++i) {
      std::vector<UserId> who;
      std::vector<int> full;
      for (const Want& w : wants) {
        if (std::find(w.cells.begin(), w.cells.end(), i) == w.cells.end()) continue;
        who.push_back(w.user);
        full.push_back(prbs_for(static_cast<double>(state(w.user).backlog_bits), payload_rate(cells_[i].id, w.user)));
      }
      auto got = water_fill(free[i], full);
      for (std::size_t k = 0; k < who.size(); ++k) cap[i][who[k]] = got[k];
    }

    for (const Want& w : wants) {
      const double backlog = static_cast<double>(state(w.user).backlog_bits);
      if (w.cells.size() == 1) {
        std::size_t i = w.cells.front();
        const double rw = rate(cells_[i].id, w.user);
        demands[i].push_back(DataDemand{w.user, prbs_for(backlog, payload_rate(cells_[i].id, w.user)), rw});
        continue;
      }
      double total = 0.0;
      for (std::size_t i : w.cells) total += cap[i][w.user] * payload_rate(cells_[i].id, w.user);
      for (std::size_t i : w.cells) {
        const double rw = rate(cells_[i].id, w.user);
        const double pr = payload_rate(cells_[i].id, w.user);
        const int c = cap[i][w.user];
        int want = c;
        if (total > 0 && backlog < total) {
          want = prbs_for(backlog * (c * pr) / total, pr);
        }
        if (total <= 0) want = prbs_for(backlog, pr);
        if (want > 0) demands[i].push_back(DataDemand{w.user, want, rw});
      }
    }
  }

  // Moves queued bits into a new TB. Shrinks the grant when the queue holds
  // less than it could carry; returns false if nothing was left to send.
  bool fill_new_tb(UserState& st, Grant& g, CellId c, std::int64_t sf) {
    const double per_prb = payload_rate(c, g.user);
    std::int64_t room = static_cast<std::int64_t>(std::floor(g.prbs * per_prb + 1e-9));
    TransportBlock tb{c, g.user, sf, {}};
    std::int64_t used = 0;
    while (room > 0 && !st.queue.empty()) {
      Queued& q = st.queue.front();
      std::int64_t take = std::min(room, q.bits_left);
      InFlight& f = packets_.at(q.uid);
      f.unassigned_bits -= take;
      f.fragments_outstanding += 1;
      f.last_subframe = std::max(f.last_subframe, sf);
      tb.fragments.push_back(Fragment{q.uid, take});
      q.bits_left -= take;
      room -= take;
      used += take;
      if (q.bits_left == 0) st.queue.pop_front();
    }
    st.backlog_bits -= used;
    if (used == 0) return false;
    g.prbs = std::min(g.prbs, prbs_for(static_cast<double>(used), per_prb));

    const std::uint64_t id = next_tb_id_++;
    HarqProcess proc{id, c, g.user, sf, g.prbs, g.rw_bits_per_prb, {}};
    const TbOutcome outcome = draw(proc, st.ber);
    ReorderBuffer& rb = st.reorder[c];
    tbs_.emplace(id, std::move(tb));
    if (proc.record(outcome) == HarqProcess::Status::Delivered) {
      rb.add(sf, id, ReorderBuffer::State::Delivered);
    } else {
      rb.add(sf, id, ReorderBuffer::State::Pending);
      const std::int64_t next = proc.next_attempt_subframe();
      harq_[next].push_back(std::move(proc));
    }
    return true;
  }

  void attempt_retransmission(HarqProcess proc) {
    UserState& st = state(proc.user);
    const TbOutcome outcome = draw(proc, st.ber);
    const auto status = proc.record(outcome);
    ReorderBuffer& rb = st.reorder[proc.cell];
    if (status == HarqProcess::Status::Pending) {
      const std::int64_t next = proc.next_attempt_subframe();
      harq_[next].push_back(std::move(proc));
      return;
    }
    rb.resolve(proc.tb_id, status == HarqProcess::Status::Delivered);
  }

  TbOutcome draw(const HarqProcess& proc, double ber) {
    auto it = forced_.find({proc.cell, proc.user, proc.original_subframe});
    if (it != forced_.end()) {
      const int attempt = static_cast<int>(proc.outcomes.size());
      return attempt < it->second ? TbOutcome::Failed : TbOutcome::Ok;
    }
    return transmit_tb(ber, proc.prbs * proc.rw_bits_per_prb, rng_);
  }

  void release(UserId u, CellId c, std::int64_t sf, SubframeResult& result) {
    UserState& st = state(u);
    auto rit = st.reorder.find(c);
    if (rit == st.reorder.end()) return;
    for (const ReorderBuffer::Released& r : rit->second.release(sf)) {
      auto tit = tbs_.find(r.tb_id);
      TransportBlock tb = std::move(tit->second);
      tbs_.erase(tit);
      for (const Fragment& frag : tb.fragments) {
        auto pit = packets_.find(frag.uid);
        InFlight& f = pit->second;
        f.fragments_outstanding -= 1;
        if (!r.delivered && !f.lost) {
          f.lost = true;
          result.lost.push_back(f.packet);
        }
        if (f.unassigned_bits == 0 && f.fragments_outstanding == 0) {
          if (!f.lost) {
            result.delivered.push_back(DeliveredPacket{
                f.packet, sf, static_cast<double>(sf - f.last_subframe)});
          }
          packets_.erase(pit);
        }
      }
    }
  }

 private:
  std::vector<CellConfig> cells_;
  BaseStationConfig config_;
  sim::Rng rng_;
  std::map<CellId, std::size_t> cell_index_;
  std::map<UserId, UserState> users_;
  std::map<std::pair<CellId, UserId>, double> rate_override_;
  std::vector<BackgroundProfile> background_;
  std::map<std::tuple<CellId, UserId, std::int64_t>, int> forced_;
  std::map<std::int64_t, std::vector<HarqProcess>> harq_;
  std::unordered_map<std::uint64_t, InFlight> packets_;
  std::unordered_map<std::uint64_t, TransportBlock> tbs_;
  std::uint64_t next_packet_uid_ = 0;
  std::uint64_t next_tb_id_ = 0;
};

}  // namespace pbecc::mac
