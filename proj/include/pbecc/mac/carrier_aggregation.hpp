#pragma once

#include <algorithm>
#include <cstddef>
#include <deque>
#include <optional>
#include <stdexcept>
#include <vector>

#include "pbecc/mac/types.hpp"

namespace pbecc::mac {

struct CaThresholds {
  double activation_share = 0.9;   // user PRBs / PRBs of active serving cells
  int activation_window = 100;     // subframes
  double deactivation_ratio = 0.8; // offered demand / capacity without the top cell
  int deactivation_window = 500;   // subframes
};

// Per-subframe utilization observed for one user.
struct CaSample {
  int user_prbs = 0;
  int active_capacity_prbs = 0;
  double arrival_bits = 0.0;
  double capacity_without_highest_bits = 0.0;
};

struct CaChange {
  CellId cell = 0;
  bool activated = false;
};

// Carrier aggregation state for one user. Cells are listed in activation
// order; the first (primary) is always active and cell k+1 can only be active
// while cell k is. Both windows restart after every change.
class CaController {
 public:
  CaController(std::vector<CellId> cells, CaThresholds thresholds)
      : cells_(std::move(cells)), thresholds_(thresholds) {
    if (cells_.empty()) throw std::invalid_argument("carrier aggregation needs a primary cell");
    if (thresholds_.activation_window <= 0 || thresholds_.deactivation_window <= 0) {
      throw std::invalid_argument("carrier aggregation windows must be positive");
    }
  }

  const std::vector<CellId>& cells() const { return cells_; }
  std::size_t active_count() const { return active_; }

  std::vector<CellId> active_cells() const {
    return {cells_.begin(), cells_.begin() + static_cast<std::ptrdiff_t>(active_)};
  }

  bool is_active(CellId cell) const {
    auto it = std::find(cells_.begin(), cells_.begin() + static_cast<std::ptrdiff_t>(active_), cell);
    return it != cells_.begin() + static_cast<std::ptrdiff_t>(active_);
  }

  std::optional<CaChange> update(const CaSample& sample) {
    push(sample);
    if (active_ < cells_.size() && window_.size() >= static_cast<std::size_t>(thresholds_.activation_window)) {
      if (act_capacity_ > 0 &&
          static_cast<double>(act_user_) > thresholds_.activation_share * static_cast<double>(act_capacity_)) {
        ++active_;
        reset();
        return CaChange{cells_[active_ - 1], true};
      }
    }
    if (active_ > 1 && window_.size() >= static_cast<std::size_t>(thresholds_.deactivation_window)) {
      if (deact_arrivals_ < thresholds_.deactivation_ratio * deact_capacity_) {
        --active_;
        reset();
        return CaChange{cells_[active_], false};
      }
    }
    return std::nullopt;
  }

 private:
  void push(const CaSample& s) {
    window_.push_back(s);
    act_user_ += s.user_prbs;
    act_capacity_ += s.active_capacity_prbs;
    deact_arrivals_ += s.arrival_bits;
    deact_capacity_ += s.capacity_without_highest_bits;
    const std::size_t n = window_.size();
    const auto wa = static_cast<std::size_t>(thresholds_.activation_window);
    const auto wd = static_cast<std::size_t>(thresholds_.deactivation_window);
    if (n > wa) {
      const CaSample& old = window_[n - 1 - wa];
      act_user_ -= old.user_prbs;
      act_capacity_ -= old.active_capacity_prbs;
    }
    if (n > wd) {
      const CaSample& old = window_[n - 1 - wd];
      deact_arrivals_ -= old.arrival_bits;
      deact_capacity_ -= old.capacity_without_highest_bits;
    }
    if (n > std::max(wa, wd)) window_.pop_front();
  }

  void reset() {
    window_.clear();
    act_user_ = act_capacity_ = 0;
    deact_arrivals_ = deact_capacity_ = 0.0;
  }

  std::vector<CellId> cells_;
  CaThresholds thresholds_;
  std::size_t active_ = 1;
  std::deque<CaSample> window_;
  long long act_user_ = 0;
  long long act_capacity_ = 0;
  double deact_arrivals_ = 0.0;
  double deact_capacity_ = 0.0;
};

}  // namespace pbecc::mac
