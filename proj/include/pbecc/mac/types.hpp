#pragma once

#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace pbecc::mac {

using UserId = std::uint32_t;
using CellId = std::uint32_t;

// One component carrier. Rates are per-user defaults; the base station keeps
// per-(cell, user) overrides driven by the scenario timeline.
struct CellConfig {
  CellId id = 0;
  int prbs = 100;                  // 50 for 10 MHz, 100 for 20 MHz
  double rw_bits_per_prb = 1000.0;
  double ber = 0.0;

  void validate() const {
    if (prbs <= 0) throw std::invalid_argument("cell " + std::to_string(id) + ": prbs must be > 0");
    if (!(rw_bits_per_prb > 0)) {
      throw std::invalid_argument("cell " + std::to_string(id) + ": rw_bits_per_prb must be > 0");
    }
    if (!(ber >= 0.0 && ber < 1.0)) {
      throw std::invalid_argument("cell " + std::to_string(id) + ": ber must be in [0, 1)");
    }
  }
};

// A decoded downlink control message: one grant for one user in one subframe.
struct Grant {
  UserId user = 0;
  int prbs = 0;
  double rw_bits_per_prb = 0.0;
  bool new_data = true;  // false for a HARQ retransmission

  double tb_bits() const { return prbs * rw_bits_per_prb; }
};

struct SubframeAllocation {
  std::int64_t subframe = 0;
  CellId cell = 0;
  int cell_prbs = 0;
  std::vector<Grant> grants;

  int allocated_prbs() const {
    return std::accumulate(grants.begin(), grants.end(), 0,
                           [](int acc, const Grant& g) { return acc + g.prbs; });
  }
  int idle_prbs() const { return cell_prbs - allocated_prbs(); }
};

}  // namespace pbecc::mac
