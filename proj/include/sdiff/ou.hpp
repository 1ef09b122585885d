#pragma once

// Ornstein-Uhlenbeck spectral diffusion in units of the stationary
// (inhomogeneous) standard deviation.  With the diffusion constant rescaled
// to D = alpha the stationary law is N(0, 1) and the transition kernel over
// an elapsed alpha*t is N(delta * exp(-alpha t), 1 - exp(-2 alpha t)).

#include <chrono>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace sdiff {

using Micros = std::chrono::duration<double, std::micro>;
using Nanos = std::chrono::duration<double, std::nano>;

struct OUParams {
  double alpha_per_us = 0.0;  ///< spectral diffusion rate
  bool sigma_units = true;    ///< detunings are in units of the stationary standard deviation

  void validate() const {
    if (!(alpha_per_us >= 0.0) || !std::isfinite(alpha_per_us))
      throw std::invalid_argument("OUParams: alpha must be finite and >= 0, got " +
                                  std::to_string(alpha_per_us));
  }
};

struct SpectralState {
  double detuning = 0.0;  ///< sigma units
};

/// Exact O-U update over a dimensionless elapsed time alpha*t given a unit
/// normal draw.  alpha_t = 0 returns delta unchanged.
inline double ou_propagate(double delta, double alpha_t, double noise) noexcept {
  if (alpha_t == 0.0) return delta;
  const double decay = std::exp(-alpha_t);
  return delta * decay + std::sqrt(-std::expm1(-2.0 * alpha_t)) * noise;
}

/// Precomputed kernel for repeated steps of a fixed alpha*t.
class OUKernel {
 public:
  explicit OUKernel(double alpha_t)
      : decay_(std::exp(-alpha_t)), spread_(std::sqrt(-std::expm1(-2.0 * alpha_t))) {
    if (!(alpha_t >= 0.0)) throw std::invalid_argument("OUKernel: alpha*t must be >= 0");
  }
  double operator()(double delta, double noise) const noexcept { return delta * decay_ + spread_ * noise; }
  double decay() const noexcept { return decay_; }
  double spread() const noexcept { return spread_; }

 private:
  double decay_;
  double spread_;
};

inline SpectralState ou_step(SpectralState state, const OUParams& params, Micros dt, double noise) {
  params.validate();
  if (dt.count() < 0.0) throw std::invalid_argument("ou_step: negative dt");
  return {ou_propagate(state.detuning, params.alpha_per_us * dt.count(), noise)};
}

namespace detail {
inline void require_positive_alpha_t(double alpha_t, const char* who) {
  if (!(alpha_t > 0.0) || !std::isfinite(alpha_t))
    throw std::domain_error(std::string(who) + ": alpha*t must be > 0 (use ou_step for t = 0)");
}

inline double log_conditional_density(double delta2, double delta1, double alpha_t) {
  const double var = -std::expm1(-2.0 * alpha_t);
  const double diff = delta2 - delta1 * std::exp(-alpha_t);
  return -0.5 * std::log(2.0 * std::numbers::pi * var) - diff * diff / (2.0 * var);
}
}  // namespace detail

/// P(delta2, t | delta1, 0).
inline double ou_conditional_density(double delta2, double delta1, double alpha_t) {
  detail::require_positive_alpha_t(alpha_t, "ou_conditional_density");
  return std::exp(detail::log_conditional_density(delta2, delta1, alpha_t));
}

/// Free-diffusion limit of the kernel for alpha*t << 1 started at zero, with
/// variance 2*alpha*t.
inline double ou_short_time_density(double delta2, double alpha_t) {
  detail::require_positive_alpha_t(alpha_t, "ou_short_time_density");
  return std::exp(-delta2 * delta2 / (4.0 * alpha_t)) / std::sqrt(4.0 * std::numbers::pi * alpha_t);
}

/// Normalized two-colour correlation after n_pulses pulses of per-pulse rate
/// A, with a background fraction beta.  Tends to 1 at long lags.
inline double correlation_model(double delta1, double delta2, double per_pulse_rate, double beta,
                                long n_pulses) {
  if (n_pulses < 1) throw std::invalid_argument("correlation_model: n_pulses must be >= 1");
  if (!(per_pulse_rate > 0.0)) throw std::invalid_argument("correlation_model: A must be > 0");
  if (!(beta >= 0.0 && beta <= 1.0)) throw std::invalid_argument("correlation_model: beta outside [0, 1]");
  if (beta == 1.0) return 1.0;
  const double alpha_t = per_pulse_rate * static_cast<double>(n_pulses);
  const double log_ratio = 0.5 * std::log(2.0 * std::numbers::pi) + 0.5 * delta2 * delta2 +
                           detail::log_conditional_density(delta2, delta1, alpha_t);
  return beta + (1.0 - beta) * std::exp(log_ratio);
}

}  // namespace sdiff
