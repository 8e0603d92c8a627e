#pragma once

#include <array>
#include <cstddef>

#include "pbecc/sim/time.hpp"

namespace pbecc::cc {

inline constexpr std::array<double, 8> kProbeBwGains{1.25, 0.75, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0};

// Eight-phase pacing-gain cycle, one RTprop per phase. Phase boundaries are
// laid out back to back so the cycle does not drift.
class GainCycle {
 public:
  void start(SimTime now, std::size_t index = 0) {
    index_ = index % kProbeBwGains.size();
    phase_start_ = now;
  }

  // Moves past every phase boundary up to `now`; true if the phase changed.
  bool advance(SimTime now, Duration phase_length) {
    if (phase_length <= Duration::zero()) return false;
    bool moved = false;
    while (now - phase_start_ >= phase_length) {
      phase_start_ += phase_length;
      index_ = (index_ + 1) % kProbeBwGains.size();
      moved = true;
    }
    return moved;
  }

  std::size_t index() const { return index_; }
  double gain() const { return kProbeBwGains[index_]; }
  SimTime phase_start() const { return phase_start_; }

 private:
  std::size_t index_ = 0;
  SimTime phase_start_{};
};

}  // namespace pbecc::cc
