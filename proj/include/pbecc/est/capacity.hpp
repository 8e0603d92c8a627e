#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>

// All rates in this module are bits per 1-ms subframe.
namespace pbecc::est {

struct FairShareInput {
  double rw_bits_per_prb = 0.0;
  int cell_prbs = 0;
  int users = 1;
};

// Per-cell fair share R_w * P_cell / N, summed over the active cells.
// Fractional PRBs are kept.
inline double fair_share_rate(std::span<const FairShareInput> cells) {
  double total = 0.0;
  for (const auto& c : cells) {
    if (c.users < 1) throw std::invalid_argument("fair share needs N >= 1");
    total += c.rw_bits_per_prb * static_cast<double>(c.cell_prbs) / c.users;
  }
  return total;
}

struct CapacityInput {
  double rw_bits_per_prb = 0.0;
  double own_prbs = 0.0;   // P_a
  double idle_prbs = 0.0;  // P_idle, all decoded users counted
  int users = 1;           // N, control traffic filtered out
};

// Physical capacity available to this user: its own allocation plus a 1/N
// share of the idle PRBs, per cell.
inline double estimate_capacity(std::span<const CapacityInput> cells) {
  double total = 0.0;
  for (const auto& c : cells) {
    if (c.users < 1) throw std::invalid_argument("capacity estimate needs N >= 1");
    total += c.rw_bits_per_prb * (c.own_prbs + c.idle_prbs / c.users);
  }
  return total;
}

// Packets that fit in six subframes at the current goodput; at least one.
inline int consecutive_threshold(double ct_bits_per_subframe, double mss_bits) {
  if (!(mss_bits > 0)) throw std::invalid_argument("MSS must be positive");
  const double n = std::ceil(6.0 * std::max(0.0, ct_bits_per_subframe) / mss_bits - 1e-9);
  return std::max(1, static_cast<int>(n));
}

}  // namespace pbecc::est
