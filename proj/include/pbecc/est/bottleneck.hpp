#pragma once

namespace pbecc::est {

enum class BottleneckState { Wireless, Internet };

inline const char* to_string(BottleneckState s) {
  return s == BottleneckState::Wireless ? "wireless" : "internet";
}

struct TransitionInput {
  int over_count = 0;   // consecutive samples above D_th
  int under_count = 0;  // consecutive samples below D_th
  int n_pkt = 1;
  bool rate_reached_fair_share = false;
};

// Wireless -> Internet after N_pkt straight samples above the threshold.
// Internet -> Wireless after N_pkt straight samples below it, once the
// sender has climbed back to the fair-share rate.
inline BottleneckState state_transition(BottleneckState current, const TransitionInput& in) {
  if (current == BottleneckState::Wireless) {
    return in.over_count >= in.n_pkt ? BottleneckState::Internet : BottleneckState::Wireless;
  }
  return (in.under_count >= in.n_pkt && in.rate_reached_fair_share) ? BottleneckState::Wireless
                                                                    : BottleneckState::Internet;
}

}  // namespace pbecc::est
