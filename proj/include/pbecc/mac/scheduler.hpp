#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "pbecc/mac/types.hpp"

namespace pbecc::mac {

// Equal-share progressive filling over integer PRBs. Each round hands every
// unsatisfied user floor(remaining / n) PRBs (capped at its demand); when the
// share rounds to zero the leftover PRBs go one each to unsatisfied users in
// round-robin order starting at `rotation`.
inline std::vector<int> water_fill(int available, std::span<const int> demands,
                                   std::size_t rotation = 0) {
  const std::size_t n = demands.size();
  std::vector<int> alloc(n, 0);
  if (n == 0 || available <= 0) return alloc;

  std::vector<std::size_t> active;
  active.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t i = (rotation + k) % n;
    if (demands[i] > 0) active.push_back(i);
  }

  int remaining = available;
  while (remaining > 0 && !active.empty()) {
    const int share = remaining / static_cast<int>(active.size());
    if (share == 0) {
      for (std::size_t i : active) {
        if (remaining == 0) break;
        ++alloc[i];
        --remaining;
      }
      break;
    }
    std::vector<std::size_t> still;
    for (std::size_t i : active) {
      int give = std::min(share, demands[i] - alloc[i]);
      alloc[i] += give;
      remaining -= give;
      if (alloc[i] < demands[i]) still.push_back(i);
    }
    active.swap(still);
  }
  return alloc;
}

struct Reservation {
  UserId user = 0;
  int prbs = 0;
  double rw_bits_per_prb = 0.0;
  bool new_data = true;
};

struct DataDemand {
  UserId user = 0;
  int prbs = 0;
  double rw_bits_per_prb = 0.0;
};

// One cell, one subframe. Pending HARQ retransmissions are served first, then
// background (control-traffic) users, truncated to what is left, then data
// users by water-filling. Whatever remains is idle.
inline SubframeAllocation schedule_subframe(CellId cell, int cell_prbs, std::int64_t subframe,
                                            std::span<const Reservation> retransmissions,
                                            std::span<const Reservation> background,
                                            std::span<const DataDemand> data) {
  SubframeAllocation out;
  out.subframe = subframe;
  out.cell = cell;
  out.cell_prbs = cell_prbs;

  int free = cell_prbs;
  auto reserve = [&](const Reservation& r, bool ndi) {
    int prbs = std::min(r.prbs, free);
    if (prbs <= 0) return;
    out.grants.push_back(Grant{r.user, prbs, r.rw_bits_per_prb, ndi});
    free -= prbs;
  };
  for (const auto& r : retransmissions) reserve(r, false);
  for (const auto& r : background) reserve(r, true);

  std::vector<int> demands;
  demands.reserve(data.size());
  for (const auto& d : data) demands.push_back(d.prbs);
  const std::size_t rotation =
      data.empty() ? 0 : static_cast<std::size_t>(subframe) % data.size();
  std::vector<int> alloc = water_fill(free, demands, rotation);
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (alloc[i] > 0) out.grants.push_back(Grant{data[i].user, alloc[i], data[i].rw_bits_per_prb, true});
  }
  return out;
}

}  // namespace pbecc::mac
