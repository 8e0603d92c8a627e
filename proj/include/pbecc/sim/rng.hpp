#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace pbecc::sim {

// Seeded 64-bit Mersenne Twister. uniform() is built from raw bits so draws are
// identical across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  bool bernoulli(double probability) { return uniform() < probability; }

  std::uint64_t next() { return engine_(); }

  // Exponential inter-arrival with the given mean.
  double exponential(double mean) {
    double u = uniform();
    while (u <= 0.0) u = uniform();
    return -mean * std::log(u);
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace pbecc::sim
