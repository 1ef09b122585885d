#pragma once

// Statistics of parallel resonance checks on N emitters.  Each emitter needs
// a geometric number of attempts with success probability 1/M; the batch is
// done when the slowest one succeeds, T = max(X_1..X_N).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "sdiff/parallel.hpp"
#include "sdiff/rng.hpp"

namespace sdiff {

struct RCProtocolParams {
  int n_qubits = 2;
  double eta_sd = 0.01;     ///< homogeneous / inhomogeneous linewidth
  double eta_sd_rc = 0.35;  ///< homogeneous / RC-conditioned linewidth
  double eta_det = 0.5;
  double tau_attempt_ns = 1000.0;

  void validate() const {
    if (n_qubits < 1) throw std::invalid_argument("RCProtocolParams: N must be >= 1");
    if (!(eta_sd > 0.0 && eta_sd <= 1.0)) throw std::invalid_argument("RCProtocolParams: eta_sd outside (0, 1]");
    if (!(eta_sd_rc > 0.0 && eta_sd_rc <= 1.0))
      throw std::invalid_argument("RCProtocolParams: eta_sd_rc outside (0, 1]");
    if (eta_sd_rc < eta_sd) throw std::invalid_argument("RCProtocolParams: eta_sd_rc must be >= eta_sd");
    if (!(eta_det > 0.0 && eta_det <= 1.0)) throw std::invalid_argument("RCProtocolParams: eta_det outside (0, 1]");
    if (!(tau_attempt_ns > 0.0)) throw std::invalid_argument("RCProtocolParams: tau must be > 0");
  }

  /// Mean attempts per emitter, M = 1 / (eta_sd * eta_det).
  double mean_attempts() const noexcept { return 1.0 / (eta_sd * eta_det); }
};

namespace detail {
inline void check_nm(int n, double m) {
  if (n < 1) throw std::invalid_argument("expected attempts: N must be >= 1");
  if (!(m >= 1.0) || !std::isfinite(m)) throw std::invalid_argument("expected attempts: M must be >= 1");
}

inline double binomial(int n, int k) {
  double c = 1.0;
  for (int i = 1; i <= k; ++i) c = c * (n - k + i) / i;
  return c;
}
}  // namespace detail

inline double expected_attempts_tailsum(int n, double m, double tol = 1e-12);

/// Inclusion-exclusion form of E[T], summed in long double with Kahan
/// compensation.  Falls back to the tail sum when cancellation would cost
/// more digits than long double carries (large N).
inline double expected_attempts_closed(int n, double m) {
  detail::check_nm(n, m);
  if (m == 1.0) return 1.0;
  // the largest binomial coefficient bounds the cancellation in the sum
  if (detail::binomial(n, n / 2) > 1e7) return expected_attempts_tailsum(n, m, 1e-14);
  const long double log_q = std::log1p(-1.0L / static_cast<long double>(m));
  long double sum = 0.0L, carry = 0.0L;
  long double choose = 1.0L;
  for (int j = 1; j <= n; ++j) {
    choose = choose * static_cast<long double>(n - j + 1) / static_cast<long double>(j);
    const long double denom = -std::expm1(static_cast<long double>(j) * log_q);  // 1 - (1 - 1/M)^j
    const long double term = (j % 2 ? 1.0L : -1.0L) * choose / denom;
    const long double y = term - carry;
    const long double t = sum + y;
    carry = (t - sum) - y;
    sum = t;
  }
  return static_cast<double>(sum);
}

/// E[T] = sum_{k>=1} [1 - (1 - (1 - 1/M)^(k-1))^N], truncated once the
/// summand drops below tol.
inline double expected_attempts_tailsum(int n, double m, double tol) {
  detail::check_nm(n, m);
  if (!(tol > 0.0)) throw std::invalid_argument("expected_attempts_tailsum: tol must be > 0");
  if (m == 1.0) return 1.0;
  const double log_q = std::log1p(-1.0 / m);
  double sum = 0.0, carry = 0.0;
  for (std::uint64_t k = 1;; ++k) {
    const double q_pow = std::exp(static_cast<double>(k - 1) * log_q);  // P(X > k-1)
    // 1 - (1 - q_pow)^N, accurate when q_pow is small
    const double term = q_pow >= 1.0 ? 1.0 : -std::expm1(n * std::log1p(-q_pow));
    const double y = term - carry;
    const double t = sum + y;
    carry = (t - sum) - y;
    sum = t;
    if (term < tol) break;
  }
  return sum;
}

inline double speedup(const RCProtocolParams& p) {
  p.validate();
  const double et = expected_attempts_closed(p.n_qubits, p.mean_attempts());
  return std::pow(p.eta_sd_rc / p.eta_sd, p.n_qubits) / (1.0 + et);
}

/// Mean preparation times (ns) with independent checks and with resonance
/// checks; their ratio is speedup().
inline double time_independent_check(const RCProtocolParams& p) {
  p.validate();
  return p.tau_attempt_ns * std::pow(1.0 / (p.eta_sd * p.eta_det), p.n_qubits);
}
inline double time_resonance_check(const RCProtocolParams& p) {
  p.validate();
  const double et = expected_attempts_closed(p.n_qubits, p.mean_attempts());
  return p.tau_attempt_ns * (1.0 + et) * std::pow(1.0 / (p.eta_sd_rc * p.eta_det), p.n_qubits);
}

struct SpeedupCell {
  int n_qubits;
  double eta_det;
  double speedup;
  bool no_speedup;  ///< speedup <= 1
};

struct SpeedupGrid {
  std::vector<int> n_values;
  std::vector<double> eta_det_values;
  std::vector<SpeedupCell> cells;  ///< row-major: N outer, eta_det inner

  const SpeedupCell& at(std::size_t n_index, std::size_t eta_index) const {
    return cells.at(n_index * eta_det_values.size() + eta_index);
  }
};

inline SpeedupGrid speedup_grid(const std::vector<int>& n_values, const std::vector<double>& eta_det_values,
                                double eta_sd, double eta_sd_rc) {
  if (n_values.empty() || eta_det_values.empty()) throw std::invalid_argument("speedup_grid: empty range");
  SpeedupGrid grid{n_values, eta_det_values, {}};
  grid.cells.reserve(n_values.size() * eta_det_values.size());
  for (int n : n_values)
    for (double eta : eta_det_values) {
      RCProtocolParams p;
      p.n_qubits = n;
      p.eta_sd = eta_sd;
      p.eta_sd_rc = eta_sd_rc;
      p.eta_det = eta;
      const double s = speedup(p);
      grid.cells.push_back({n, eta, s, s <= 1.0});
    }
  return grid;
}

inline void write_grid_csv(std::ostream& out, const SpeedupGrid& grid) {
  out << "N,eta_det,speedup,flag_le1\n";
  out.precision(12);
  for (const auto& c : grid.cells)
    out << c.n_qubits << ',' << c.eta_det << ',' << c.speedup << ',' << (c.no_speedup ? 1 : 0) << '\n';
}

struct McEstimate {
  double mean = 0.0;
  double stderr_mean = 0.0;
  std::uint64_t shots = 0;
};

/// Monte Carlo estimate of E[max of N geometric(1/M)].
inline McEstimate mc_attempts(int n, double m, std::uint64_t shots, std::uint64_t seed,
                              unsigned threads = default_threads()) {
  detail::check_nm(n, m);
  if (shots < 1) throw std::invalid_argument("mc_attempts: shots must be >= 1");
  constexpr std::uint64_t kChunk = 1u << 16;
  const std::uint64_t n_chunks = (shots + kChunk - 1) / kChunk;
  const double p = 1.0 / m;
  double sum = 0.0, sum_sq = 0.0;
  ordered_chunks(
      n_chunks, threads,
      [&](std::size_t chunk) {
        Philox rng(seed, chunk);
        const std::uint64_t count = std::min(kChunk, shots - chunk * kChunk);
        double s = 0.0, s2 = 0.0;
        for (std::uint64_t i = 0; i < count; ++i) {
          std::uint64_t t = 0;
          for (int q = 0; q < n; ++q) t = std::max(t, geometric_trials(rng, p));
          const auto x = static_cast<double>(t);
          s += x;
          s2 += x * x;
        }
        return std::pair{s, s2};
      },
      [&](std::pair<double, double> part) {
        sum += part.first;
        sum_sq += part.second;
      });
  McEstimate est;
  est.shots = shots;
  const double count = static_cast<double>(shots);
  est.mean = sum / count;
  const double var = shots > 1 ? std::max(0.0, (sum_sq - count * est.mean * est.mean) / (count - 1.0)) : 0.0;
  est.stderr_mean = std::sqrt(var / count);
  return est;
}

}  // namespace sdiff
