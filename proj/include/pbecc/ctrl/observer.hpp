#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <map>
#include <span>
#include <stdexcept>
#include <vector>

#include "pbecc/mac/types.hpp"

namespace pbecc::ctrl {

using mac::CellId;
using mac::UserId;

// Idle PRBs of one subframe. Every decoded grant counts, including users
// that the active-user filter later ignores.
inline int idle_prbs(const mac::SubframeAllocation& alloc) {
  const int idle = alloc.idle_prbs();
  if (idle < 0) throw std::logic_error("allocation exceeds cell PRBs");
  return idle;
}

struct UserActivity {
  UserId user = 0;
  int active_subframes = 0;  // T_a
  double avg_prbs = 0.0;     // P_ave over the subframes the user was active
};

// Users active only for a subframe with a handful of PRBs are control
// traffic. A competing user counts when T_a > min_active and P_ave > min_prbs.
struct ActivityThresholds {
  int min_active_subframes = 1;
  double min_avg_prbs = 4.0;
};

// Number of users sharing the cell, the observer itself included.
inline int filter_active_users(std::span<const UserActivity> others,
                               const ActivityThresholds& th = {}) {
  int n = 1;
  for (const auto& u : others) {
    if (u.active_subframes > th.min_active_subframes && u.avg_prbs > th.min_avg_prbs) ++n;
  }
  return n;
}

// Window averages for one cell, as fed into the capacity estimate.
struct WindowedParams {
  CellId cell = 0;
  int cell_prbs = 0;
  double rw_bits_per_prb = 0.0;  // own R_w
  double own_prbs = 0.0;         // P_a
  double idle_prbs = 0.0;        // P_idle
  int users = 1;                 // N after filtering
  int subframes = 0;             // samples in the window
};

// Sliding window over the decoded allocations of one cell, seen from one
// user. The window length tracks RTprop in subframes.
class CellObserver {
 public:
  CellObserver(CellId cell, UserId self, int cell_prbs, int window_subframes = 40,
               ActivityThresholds thresholds = {})
      : cell_(cell), self_(self), cell_prbs_(cell_prbs), thresholds_(thresholds) {
    if (cell_prbs_ <= 0) throw std::invalid_argument("cell PRBs must be positive");
    window_ = std::max(1, window_subframes);
  }

  CellId cell() const { return cell_; }
  int window() const { return window_; }

  // `own_rate` is this user's current R_w in the cell; it is only used when
  // the subframe carries no grant for this user.
  void observe(const mac::SubframeAllocation& alloc, double own_rate) {
    if (alloc.cell != cell_) throw std::invalid_argument("allocation for a different cell");
    Sample s;
    s.idle = idle_prbs(alloc);
    s.rw = own_rate;
    for (const mac::Grant& g : alloc.grants) {
      if (g.user == self_) {
        s.own += g.prbs;
        s.rw = g.rw_bits_per_prb;
      } else {
        auto it = std::find_if(s.others.begin(), s.others.end(),
                               [&](const auto& p) { return p.first == g.user; });
        if (it == s.others.end()) {
          s.others.emplace_back(g.user, g.prbs);
        } else {
          it->second += g.prbs;
        }
      }
    }
    add(s);
    history_.push_back(std::move(s));
    trim();
  }

  void set_window(int subframes) {
    subframes = std::max(1, subframes);
    if (subframes == window_) return;
    window_ = subframes;
    rebuild();
  }

  WindowedParams params() const {
    WindowedParams p;
    p.cell = cell_;
    p.cell_prbs = cell_prbs_;
    p.subframes = in_window_;
    if (in_window_ == 0) return p;
    const double n = in_window_;
    p.rw_bits_per_prb = sum_rw_ / n;
    p.own_prbs = static_cast<double>(sum_own_) / n;
    p.idle_prbs = static_cast<double>(sum_idle_) / n;
    p.users = filter_active_users(activity(), thresholds_);
    return p;
  }

  std::vector<UserActivity> activity() const {
    std::vector<UserActivity> out;
    out.reserve(users_.size());
    for (const auto& [user, agg] : users_) {
      out.push_back(UserActivity{user, agg.subframes,
                                 static_cast<double>(agg.prbs) / agg.subframes});
    }
    return out;
  }

 private:
  struct Sample {
    int own = 0;
    int idle = 0;
    double rw = 0.0;
    std::vector<std::pair<UserId, int>> others;
  };
  struct Aggregate {
    int subframes = 0;
    long long prbs = 0;
  };

  void add(const Sample& s) {
    sum_own_ += s.own;
    sum_idle_ += s.idle;
    sum_rw_ += s.rw;
    for (const auto& [u, prbs] : s.others) {
      Aggregate& a = users_[u];
      a.subframes += 1;
      a.prbs += prbs;
    }
    ++in_window_;
  }

  void remove(const Sample& s) {
    sum_own_ -= s.own;
    sum_idle_ -= s.idle;
    sum_rw_ -= s.rw;
    for (const auto& [u, prbs] : s.others) {
      auto it = users_.find(u);
      it->second.subframes -= 1;
      it->second.prbs -= prbs;
      if (it->second.subframes == 0) users_.erase(it);
    }
    --in_window_;
  }

  // Keeps the last `window_` samples counted and a bounded history so the
  // window can grow again without losing data.
  void trim() {
    while (in_window_ > window_) {
      remove(history_[history_.size() - static_cast<std::size_t>(in_window_)]);
    }
    while (history_.size() > static_cast<std::size_t>(std::max(window_, kHistory))) history_.pop_front();
  }

  void rebuild() {
    sum_own_ = sum_idle_ = 0;
    sum_rw_ = 0.0;
    users_.clear();
    in_window_ = 0;
    const std::size_t take = std::min(history_.size(), static_cast<std::size_t>(window_));
    for (std::size_t i = history_.size() - take; i < history_.size(); ++i) add(history_[i]);
  }

  static constexpr int kHistory = 1000;

  CellId cell_;
  UserId self_;
  int cell_prbs_;
  ActivityThresholds thresholds_;
  int window_ = 40;
  std::deque<Sample> history_;
  int in_window_ = 0;
  long long sum_own_ = 0;
  long long sum_idle_ = 0;
  double sum_rw_ = 0.0;
  std::map<UserId, Aggregate> users_;
};

}  // namespace pbecc::ctrl
