#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace pbecc::est {

inline constexpr double kProtocolOverhead = 0.068;

// Physical-to-transport translation. A transport goodput C_t costs
//   C_t * (2 - (1 - p)^L) + overhead * C_p
// physical bits per subframe, where the retransmission term uses the TB
// error rate at L = C_t bits (rates are per 1-ms subframe, so the TB size of
// one subframe equals C_t in these units).
namespace detail {

inline void check_translation_args(double ber, double overhead) {
  if (!(ber >= 0.0 && ber < 1.0)) throw std::invalid_argument("ber must be in [0, 1)");
  if (!(overhead >= 0.0 && overhead < 1.0)) throw std::invalid_argument("overhead must be in [0, 1)");
}

// C_t * (2 - (1-p)^C_t), strictly increasing with slope >= 1.
inline double physical_cost(double ct, double log_keep) {
  return ct * (2.0 - std::exp(ct * log_keep));
}

}  // namespace detail

// Solves for C_t by bisection. The bracket is narrowed well past the 1e-9
// relative tolerance the callers need.
inline double translate_capacity(double cp, double ber, double overhead = kProtocolOverhead) {
  detail::check_translation_args(ber, overhead);
  if (!(cp >= 0.0)) throw std::invalid_argument("physical capacity must be >= 0");
  const double target = (1.0 - overhead) * cp;
  if (target == 0.0) return 0.0;
  if (ber == 0.0) return target;
  const double log_keep = std::log1p(-ber);
  // cost(C) >= C, so the root lies in [target / 2, target].
  double lo = target / 2.0;
  double hi = target;
  while (hi - lo > 1e-12 * hi) {
    const double mid = 0.5 * (lo + hi);
    if (detail::physical_cost(mid, log_keep) < target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// Precomputed translation for one (ber, overhead) pair: log-spaced C_p grid
// with linear interpolation. Inputs past the grid fall back to bisection.
class TranslationTable {
 public:
  static constexpr std::size_t kDefaultPoints = 1024;

  TranslationTable(double ber, double overhead, double cp_min = 1.0, double cp_max = 1e6,
                   std::size_t points = kDefaultPoints)
      : ber_(ber), overhead_(overhead) {
    detail::check_translation_args(ber, overhead);
    if (!(cp_min > 0 && cp_max > cp_min) || points < 2) {
      throw std::invalid_argument("translation table needs 0 < cp_min < cp_max and >= 2 points");
    }
    log_min_ = std::log(cp_min);
    log_step_ = (std::log(cp_max) - log_min_) / static_cast<double>(points - 1);
    cp_.reserve(points);
    ct_.reserve(points);
    for (std::size_t i = 0; i < points; ++i) {
      const double cp = i + 1 == points ? cp_max : std::exp(log_min_ + log_step_ * static_cast<double>(i));
      cp_.push_back(cp);
      ct_.push_back(translate_capacity(cp, ber, overhead));
    }
  }

  double ber() const { return ber_; }
  double overhead() const { return overhead_; }

  double operator()(double cp) const {
    if (!(cp >= 0.0)) throw std::invalid_argument("physical capacity must be >= 0");
    if (cp <= cp_.front()) return ct_.front() * (cp / cp_.front());
    if (cp >= cp_.back()) return cp == cp_.back() ? ct_.back() : translate_capacity(cp, ber_, overhead_);
    std::size_t i = static_cast<std::size_t>((std::log(cp) - log_min_) / log_step_);
    i = std::min(i, cp_.size() - 2);
    while (i > 0 && cp_[i] > cp) --i;
    while (i + 2 < cp_.size() && cp_[i + 1] < cp) ++i;
    const double t = (cp - cp_[i]) / (cp_[i + 1] - cp_[i]);
    return ct_[i] + t * (ct_[i + 1] - ct_[i]);
  }

 private:
  double ber_;
  double overhead_;
  double log_min_ = 0.0;
  double log_step_ = 0.0;
  std::vector<double> cp_;
  std::vector<double> ct_;
};

}  // namespace pbecc::est
