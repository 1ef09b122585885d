#pragma once

// Discrete charge environment: N two-valued charges whose mean sets the
// emitter detuning.  Each step a fixed fraction of the charges is chosen
// without replacement and each chosen charge is redrawn as +1 or -1 with
// equal probability, which gives E[d delta | delta] = -fraction * delta.

#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <utility>
#include <vector>

#include "sdiff/ou.hpp"
#include "sdiff/rng.hpp"

namespace sdiff {

class ChargeBath {
 public:
  /// Charges start in an independent +-1 configuration (the stationary law).
  ChargeBath(std::size_t n_charges, double scramble_fraction, std::uint64_t seed, std::uint64_t stream = 0)
      : ChargeBath(std::vector<std::int8_t>(n_charges, 1), scramble_fraction, seed, stream) {
    std::uint64_t bits = 0;
    for (std::size_t i = 0; i < charges_.size(); ++i) {
      if (i % 64 == 0) bits = rng_.next_u64();
      charges_[i] = (bits >> (i % 64)) & 1u ? 1 : -1;
    }
    sum_ = std::accumulate(charges_.begin(), charges_.end(), std::int64_t{0});
  }

  ChargeBath(std::vector<std::int8_t> charges, double scramble_fraction, std::uint64_t seed,
             std::uint64_t stream = 0)
      : charges_(std::move(charges)), fraction_(scramble_fraction), rng_(seed, stream) {
    if (charges_.empty()) throw std::invalid_argument("ChargeBath: need at least one charge");
    if (charges_.size() > 0xFFFFFFFFu) throw std::invalid_argument("ChargeBath: too many charges");
    if (!(fraction_ >= 0.0 && fraction_ <= 1.0))
      throw std::invalid_argument("ChargeBath: scramble fraction outside [0, 1]");
    for (auto c : charges_)
      if (c != 1 && c != -1) throw std::invalid_argument("ChargeBath: charges must be +1 or -1");
    sum_ = std::accumulate(charges_.begin(), charges_.end(), std::int64_t{0});
    order_.resize(charges_.size());
    std::iota(order_.begin(), order_.end(), 0u);
    const double expected = fraction_ * static_cast<double>(charges_.size());
    if (expected < 1.0) {
      scramble_count_ = 1;
      scramble_probability_ = expected;
    } else {
      scramble_count_ = static_cast<std::size_t>(std::nearbyint(expected));  // ties to even
      scramble_probability_ = 1.0;
    }
  }

  std::size_t size() const noexcept { return charges_.size(); }
  double scramble_fraction() const noexcept { return fraction_; }
  const std::vector<std::int8_t>& charges() const noexcept { return charges_; }
  std::int64_t charge_sum() const noexcept { return sum_; }

  /// Mean charge; |detuning()| <= 1.
  double detuning() const noexcept { return static_cast<double>(sum_) / static_cast<double>(size()); }

  /// Detuning rescaled to unit stationary variance (sum / sqrt(N)).
  double rescaled_detuning() const noexcept {
    return static_cast<double>(sum_) / std::sqrt(static_cast<double>(size()));
  }

  SpectralState state() const noexcept { return {rescaled_detuning()}; }

  /// Advance one time step in place.
  void step() {
    if (scramble_probability_ < 1.0 && !bernoulli(rng_, scramble_probability_)) return;
    const auto n = static_cast<std::uint32_t>(size());
    std::uint32_t sign_bits = 0;
    for (std::size_t i = 0; i < scramble_count_; ++i) {
      // partial Fisher-Yates: order_[0..i] is a uniform sample without replacement
      const std::uint32_t j = static_cast<std::uint32_t>(i) + uniform_below(rng_, n - static_cast<std::uint32_t>(i));
      std::swap(order_[i], order_[j]);
      if (i % 32 == 0) sign_bits = rng_();
      const std::int8_t fresh = (sign_bits >> (i % 32)) & 1u ? 1 : -1;
      std::int8_t& c = charges_[order_[i]];
      sum_ += fresh - c;
      c = fresh;
    }
  }

 private:
  std::vector<std::int8_t> charges_;
  std::vector<std::uint32_t> order_;
  double fraction_;
  std::size_t scramble_count_ = 0;
  double scramble_probability_ = 1.0;
  std::int64_t sum_ = 0;
  Philox rng_;
};

/// Value-semantic single step.
inline ChargeBath bath_step(ChargeBath bath) {
  bath.step();
  return bath;
}

}  // namespace sdiff
