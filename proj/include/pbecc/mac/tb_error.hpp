#pragma once

#include <cmath>
#include <stdexcept>

#include "pbecc/sim/rng.hpp"

namespace pbecc::mac {

// Transport block error rate for i.i.d. bit errors: 1 - (1 - p)^L,
// evaluated in log space so tiny p and large L stay accurate.
inline double tb_error_probability(double ber, double tb_bits) {
  if (!(ber >= 0.0 && ber < 1.0)) throw std::invalid_argument("ber must be in [0, 1)");
  if (ber == 0.0 || tb_bits <= 0.0) return 0.0;
  return -std::expm1(tb_bits * std::log1p(-ber));
}

enum class TbOutcome { Ok, Failed };

inline TbOutcome transmit_tb(double ber, double tb_bits, sim::Rng& rng) {
  const double p_fail = tb_error_probability(ber, tb_bits);
  if (p_fail == 0.0) return TbOutcome::Ok;
  return rng.bernoulli(p_fail) ? TbOutcome::Failed : TbOutcome::Ok;
}

}  // namespace pbecc::mac
