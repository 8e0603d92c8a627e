#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>

namespace pbecc {

// Simulated time. Instants are time points on SimClock, spans are Duration
// (integer microseconds). The cellular side advances in 1 ms subframes.
using Duration = std::chrono::microseconds;

struct SimClock {
  using rep = std::int64_t;
  using period = std::micro;
  using duration = Duration;
  using time_point = std::chrono::time_point<SimClock, Duration>;
  static constexpr bool is_steady = true;
};

using SimTime = SimClock::time_point;

inline constexpr Duration kSubframe{1000};
inline constexpr SimTime kSimStart{};

constexpr std::int64_t micros(SimTime t) { return t.time_since_epoch().count(); }

constexpr SimTime at_micros(std::int64_t us) { return SimTime{Duration{us}}; }

// floor(t / 1 ms); simulated time never goes negative so this is plain division.
constexpr std::int64_t subframe_index(SimTime t) {
  return micros(t) / kSubframe.count();
}

constexpr SimTime subframe_start(std::int64_t subframe) {
  return SimTime{kSubframe * subframe};
}

constexpr double to_ms(Duration d) { return static_cast<double>(d.count()) / 1000.0; }

inline Duration from_ms(double ms) {
  return Duration{static_cast<std::int64_t>(std::llround(ms * 1000.0))};
}

inline Duration from_seconds(double s) { return from_ms(s * 1000.0); }

}  // namespace pbecc
