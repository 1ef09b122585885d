#pragma once

// Counter-based random numbers (Philox4x32-10) and the handful of
// distributions the simulators need.  Distributions are implemented here
// rather than taken from <random> so that streams are bitwise identical
// across standard library implementations.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

namespace sdiff {

/// Philox4x32-10 (Salmon et al., SC'11).  The 64-bit key is the master seed,
/// the upper half of the 128-bit counter is the stream index, the lower half
/// counts blocks within the stream.  Satisfies UniformRandomBitGenerator.
class Philox {
 public:
  using result_type = std::uint32_t;

  Philox(std::uint64_t seed, std::uint64_t stream = 0) noexcept
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        stream_(stream) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept {
    if (index_ == 4) refill();
    return buffer_[index_++];
  }

  std::uint64_t next_u64() noexcept {
    std::uint64_t hi = (*this)();
    return (hi << 32) | (*this)();
  }

  std::uint64_t seed() const noexcept {
    return (static_cast<std::uint64_t>(key_[1]) << 32) | key_[0];
  }
  std::uint64_t stream() const noexcept { return stream_; }

 private:
  static constexpr std::uint32_t kMulA = 0xD2511F53;
  static constexpr std::uint32_t kMulB = 0xCD9E8D57;
  static constexpr std::uint32_t kWeylA = 0x9E3779B9;
  static constexpr std::uint32_t kWeylB = 0xBB67AE85;

  void refill() noexcept {
    std::array<std::uint32_t, 4> ctr{static_cast<std::uint32_t>(block_),
                                     static_cast<std::uint32_t>(block_ >> 32),
                                     static_cast<std::uint32_t>(stream_),
                                     static_cast<std::uint32_t>(stream_ >> 32)};
    std::array<std::uint32_t, 2> key = key_;
    for (int round = 0; round < 10; ++round) {
      const std::uint64_t p0 = static_cast<std::uint64_t>(kMulA) * ctr[0];
      const std::uint64_t p1 = static_cast<std::uint64_t>(kMulB) * ctr[2];
      ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0], static_cast<std::uint32_t>(p1),
             static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1], static_cast<std::uint32_t>(p0)};
      key[0] += kWeylA;
      key[1] += kWeylB;
    }
    buffer_ = ctr;
    index_ = 0;
    ++block_;
  }

  std::array<std::uint32_t, 2> key_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int index_ = 4;
};

/// Uniform double in [0, 1) with 53 random bits.
template <class Engine>
double uniform01(Engine& rng) noexcept {
  return static_cast<double>(rng.next_u64() >> 11) * 0x1.0p-53;
}

/// Uniform double in (0, 1]; safe to take the log of.
template <class Engine>
double uniform_open_low(Engine& rng) noexcept {
  return (static_cast<double>(rng.next_u64() >> 11) + 1.0) * 0x1.0p-53;
}

/// Unbiased integer in [0, bound) (Lemire's multiply-and-reject).
template <class Engine>
std::uint32_t uniform_below(Engine& rng, std::uint32_t bound) noexcept {
  std::uint64_t m = static_cast<std::uint64_t>(rng()) * bound;
  auto low = static_cast<std::uint32_t>(m);
  if (low < bound) {
    const std::uint32_t threshold = static_cast<std::uint32_t>(-bound) % bound;
    while (low < threshold) {
      m = static_cast<std::uint64_t>(rng()) * bound;
      low = static_cast<std::uint32_t>(m);
    }
  }
  return static_cast<std::uint32_t>(m >> 32);
}

template <class Engine>
bool bernoulli(Engine& rng, double p) noexcept {
  return uniform01(rng) < p;
}

/// Standard normal draws by the Box-Muller transform, caching the second
/// variate of each pair.
class NormalSampler {
 public:
  template <class Engine>
  double operator()(Engine& rng) noexcept {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double r = std::sqrt(-2.0 * std::log(uniform_open_low(rng)));
    const double phi = 2.0 * std::numbers::pi * uniform01(rng);
    spare_ = r * std::sin(phi);
    has_spare_ = true;
    return r * std::cos(phi);
  }

 private:
  double spare_ = 0.0;
  bool has_spare_ = false;
};

template <class Engine>
double exponential(Engine& rng, double mean) noexcept {
  return -mean * std::log(uniform_open_low(rng));
}

/// Poisson variate.  Multiplicative inversion for small means, otherwise a
/// rounded normal approximation; the simulators only use means well below 1.
template <class Engine>
std::uint32_t poisson(Engine& rng, double mean) noexcept {
  if (mean <= 0.0) return 0;
  if (mean < 30.0) {
    const double limit = std::exp(-mean);
    std::uint32_t k = 0;
    double prod = uniform01(rng);
    while (prod > limit) {
      ++k;
      prod *= uniform01(rng);
    }
    return k;
  }
  NormalSampler normal;
  const double x = std::round(mean + std::sqrt(mean) * normal(rng));
  return x < 0.0 ? 0u : static_cast<std::uint32_t>(x);
}

/// Geometric number of trials up to and including the first success.
template <class Engine>
std::uint64_t geometric_trials(Engine& rng, double p) noexcept {
  if (p >= 1.0) return 1;
  const double u = uniform_open_low(rng);
  return 1 + static_cast<std::uint64_t>(std::floor(std::log(u) / std::log1p(-p)));
}

}  // namespace sdiff
