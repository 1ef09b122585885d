#pragma once

// Parameter recovery from correlation curves, lineshapes, and spin-mixing
// populations.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "sdiff/correlator.hpp"
#include "sdiff/emitter.hpp"
#include "sdiff/least_squares.hpp"
#include "sdiff/ou.hpp"

namespace sdiff {

struct FitResult {
  std::vector<std::string> names;
  std::vector<double> values;
  std::vector<double> errors;  ///< 1 sigma
  double residual_norm = std::numeric_limits<double>::quiet_NaN();  ///< sqrt(chi^2)
  int dof = 0;
  bool converged = false;
  std::string message;

  double value(const std::string& name) const { return values.at(index(name)); }
  double error(const std::string& name) const { return errors.at(index(name)); }

 private:
  std::size_t index(const std::string& name) const {
    auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) throw std::out_of_range("FitResult: no parameter '" + name + "'");
    return static_cast<std::size_t>(it - names.begin());
  }
};

inline void write_fit_csv_header(std::ostream& out) {
  out << "parameter,estimate,uncertainty,residual_norm,dof,converged,status\n";
}

/// One row per parameter; `status` is "ok" or the fit's message with commas
/// replaced.
inline void write_fit_csv_rows(std::ostream& out, const FitResult& fit) {
  std::string status = fit.message.empty() ? (fit.converged ? "ok" : "not converged") : fit.message;
  std::replace(status.begin(), status.end(), ',', ';');
  const auto old_precision = out.precision(12);
  for (std::size_t i = 0; i < fit.names.size(); ++i)
    out << fit.names[i] << ',' << fit.values[i] << ',' << fit.errors[i] << ',' << fit.residual_norm << ','
        << fit.dof << ',' << (fit.converged ? 1 : 0) << ',' << status << '\n';
  out.precision(old_precision);
}

inline void write_fit_csv(std::ostream& out, const FitResult& fit) {
  write_fit_csv_header(out);
  write_fit_csv_rows(out, fit);
}

// ---------------------------------------------------------------------------
// Background fraction of a two-window coincidence from the signal rates at
// the two detunings and the noise rate.

inline double compute_beta(double r_signal_1, double r_signal_2, double r_noise) {
  if (!(r_signal_1 >= 0.0 && r_signal_2 >= 0.0 && r_noise >= 0.0))
    throw std::invalid_argument("compute_beta: rates must be >= 0");
  if (r_signal_1 == 0.0 && r_signal_2 == 0.0 && r_noise == 0.0)
    throw std::invalid_argument("compute_beta: all rates are zero");
  const double noise_terms = r_noise * (r_noise + r_signal_1 + r_signal_2);
  const double denom = noise_terms + r_signal_1 * r_signal_2;
  if (denom == 0.0) throw std::domain_error("compute_beta: no coincidence signal (one signal rate is zero, no noise)");
  return noise_terms / denom;
}

// ---------------------------------------------------------------------------
// Joint fit of the per-pulse diffusion rate A over several correlation curves.

struct CurveData {
  CorrelationCurve curve;
  double delta1 = 0.0;  ///< sigma units
  double delta2 = 0.0;
  std::optional<double> beta;  ///< replaces the shared beta in fit_A
};

struct FitAOptions {
  long min_lag = 1;
  long max_lag = 199;  ///< stay below the default normalization window
  double a_min = 1e-5;
  double a_max = 10.0;
  int grid_points = 241;
  double rel_tol = 1e-9;
  double max_relative_error = 1.0;  ///< larger 1 sigma / A counts as unidentifiable
};

namespace detail {
inline double correlation_chi2(std::span<const CurveData> curves, double a, double beta, const FitAOptions& opt,
                               int* points = nullptr) {
  double chi2 = 0.0;
  int n = 0;
  for (const auto& c : curves) {
    for (std::size_t i = 0; i < c.curve.size(); ++i) {
      const long lag = std::labs(c.curve.lags[i]);
      if (lag < std::max(1L, opt.min_lag) || lag > opt.max_lag || !(c.curve.std_errors[i] > 0.0)) continue;
      const double r = (c.curve.values[i] - correlation_model(c.delta1, c.delta2, a, c.beta.value_or(beta), lag)) /
                       c.curve.std_errors[i];
      chi2 += r * r;
      ++n;
    }
  }
  if (points) *points = n;
  return chi2;
}
}  // namespace detail

/// Weighted least squares in A with beta held fixed.  Coarse log grid, then
/// golden-section refinement; 1 sigma from the curvature of chi^2.
inline FitResult fit_A(std::span<const CurveData> curves, double beta, const FitAOptions& opt = {}) {
  if (curves.empty()) throw std::invalid_argument("fit_A: need at least one curve");
  if (!(beta >= 0.0 && beta < 1.0)) throw std::invalid_argument("fit_A: beta outside [0, 1)");
  for (const auto& c : curves)
    if (c.beta && !(*c.beta >= 0.0 && *c.beta < 1.0)) throw std::invalid_argument("fit_A: curve beta outside [0, 1)");
  FitResult fit;
  fit.names = {"A"};
  int points = 0;
  detail::correlation_chi2(curves, 1.0, beta, opt, &points);
  if (points < 2) throw std::invalid_argument("fit_A: fewer than two usable curve points");
  fit.dof = points - 1;

  auto chi2_log = [&](double log_a) { return detail::correlation_chi2(curves, std::exp(log_a), beta, opt); };
  const double lo = std::log(opt.a_min), hi = std::log(opt.a_max);
  const int n = std::max(opt.grid_points, 3);
  int best = 0;
  double best_chi2 = std::numeric_limits<double>::infinity();
  std::vector<double> grid(n);
  for (int i = 0; i < n; ++i) {
    grid[i] = lo + (hi - lo) * i / (n - 1);
    const double c = chi2_log(grid[i]);
    if (c < best_chi2) {
      best_chi2 = c;
      best = i;
    }
  }
  if (best == 0 || best == n - 1) {
    fit.values = {std::exp(grid[best])};
    fit.errors = {std::numeric_limits<double>::infinity()};
    fit.residual_norm = std::sqrt(best_chi2);
    fit.message = "unidentifiable: chi^2 minimum on the search boundary";
    return fit;
  }
  const auto m = golden_section_minimize(chi2_log, grid[best - 1], grid[best + 1], opt.rel_tol * 1e-2);
  const double a = std::exp(m.x);
  const double h = 1e-3 * a;
  auto chi2_a = [&](double x) { return detail::correlation_chi2(curves, x, beta, opt); };
  const double curvature = (chi2_a(a + h) - 2.0 * chi2_a(a) + chi2_a(a - h)) / (h * h);
  fit.values = {a};
  fit.residual_norm = std::sqrt(m.f);
  if (!(curvature > 0.0)) {
    fit.errors = {std::numeric_limits<double>::infinity()};
    fit.message = "unidentifiable: non-positive chi^2 curvature";
    return fit;
  }
  const double sigma = std::sqrt(2.0 / curvature);
  fit.errors = {sigma};
  if (sigma > opt.max_relative_error * a) {
    fit.message = "unidentifiable: chi^2 curvature below threshold";
    return fit;
  }
  fit.converged = m.converged;
  if (!fit.converged) fit.message = "golden-section search did not converge";
  return fit;
}

/// Sensitivity variant: A and beta free together.
/// Sensitivity fit with one beta shared by all curves; per-curve beta values
/// are ignored.
inline FitResult fit_A_beta(std::span<const CurveData> curves, double a_start, double beta_start,
                            const FitAOptions& opt = {}) {
  if (curves.empty()) throw std::invalid_argument("fit_A_beta: need at least one curve");
  std::vector<std::pair<const CurveData*, std::size_t>> pts;
  for (const auto& c : curves)
    for (std::size_t i = 0; i < c.curve.size(); ++i) {
      const long lag = std::labs(c.curve.lags[i]);
      if (lag >= std::max(1L, opt.min_lag) && lag <= opt.max_lag && c.curve.std_errors[i] > 0.0) pts.push_back({&c, i});
    }
  if (pts.size() < 3) throw std::invalid_argument("fit_A_beta: fewer than three usable curve points");
  auto residuals = [&](const Eigen::VectorXd& p, Eigen::VectorXd& r) {
    const double a = std::exp(p[0]);
    const double beta = std::clamp(p[1], 0.0, 0.999999);
    for (std::size_t k = 0; k < pts.size(); ++k) {
      const auto& [c, i] = pts[k];
      r[static_cast<Eigen::Index>(k)] =
          (c->curve.values[i] - correlation_model(c->delta1, c->delta2, a, beta, std::labs(c->curve.lags[i]))) /
          c->curve.std_errors[i];
    }
  };
  Eigen::VectorXd p0(2);
  p0 << std::log(a_start), beta_start;
  const auto lm = levenberg_marquardt(residuals, p0, static_cast<Eigen::Index>(pts.size()));
  FitResult fit;
  fit.names = {"A", "beta"};
  const double a = std::exp(lm.params[0]);
  fit.values = {a, std::clamp(lm.params[1], 0.0, 0.999999)};
  fit.errors = {a * std::sqrt(lm.covariance(0, 0)), std::sqrt(lm.covariance(1, 1))};
  fit.residual_norm = std::sqrt(lm.chi2);
  fit.dof = static_cast<int>(pts.size()) - 2;
  fit.converged = lm.converged && !lm.singular && std::isfinite(fit.errors[0]);
  return fit;
}

// ---------------------------------------------------------------------------
// Peak lineshapes: centre, FWHM, amplitude, constant offset.

enum class LineShape { lorentzian, gaussian };

inline double lineshape_value(LineShape shape, double x, double centre, double fwhm, double amplitude,
                              double offset) noexcept {
  const double u = (x - centre) / fwhm;
  if (shape == LineShape::lorentzian) return amplitude / (1.0 + 4.0 * u * u) + offset;
  return amplitude * std::exp(-4.0 * std::numbers::ln2 * u * u) + offset;
}

/// Nonlinear least squares fit.  With `sigmas` the fit is weighted and the
/// covariance taken as is; without, uncertainties are scaled by the reduced
/// chi^2.
inline FitResult fit_lineshape(std::span<const double> freqs, std::span<const double> values, LineShape shape,
                               std::span<const double> sigmas = {}) {
  if (freqs.size() != values.size()) throw std::invalid_argument("fit_lineshape: size mismatch");
  if (!sigmas.empty() && sigmas.size() != values.size())
    throw std::invalid_argument("fit_lineshape: sigma size mismatch");
  if (freqs.size() < 5) throw std::invalid_argument("fit_lineshape: need at least 5 points");

  FitResult fit;
  fit.names = {"centre", "fwhm", "amplitude", "offset"};
  fit.dof = static_cast<int>(freqs.size()) - 4;
  const auto [xmin_it, xmax_it] = std::minmax_element(freqs.begin(), freqs.end());
  const auto [ymin_it, ymax_it] = std::minmax_element(values.begin(), values.end());
  const double y_lo = *ymin_it, y_hi = *ymax_it;
  const double y_scale = std::max(std::abs(y_lo), std::abs(y_hi));
  if (!(y_hi - y_lo > 1e-12 * y_scale) || !(*xmax_it > *xmin_it)) {
    fit.values = {0.0, 0.0, 0.0, y_lo};
    fit.errors.assign(4, std::numeric_limits<double>::infinity());
    fit.message = "degenerate: data are flat";
    return fit;
  }
  const double x_mid = 0.5 * (*xmin_it + *xmax_it);
  const double x_scale = 0.5 * (*xmax_it - *xmin_it);
  const std::size_t m = freqs.size();
  std::vector<double> xs(m), ys(m), ws(m, 1.0);
  for (std::size_t i = 0; i < m; ++i) {
    xs[i] = (freqs[i] - x_mid) / x_scale;
    ys[i] = values[i] / y_scale;
    if (!sigmas.empty()) {
      if (!(sigmas[i] > 0.0)) throw std::invalid_argument("fit_lineshape: sigmas must be > 0");
      ws[i] = y_scale / sigmas[i];
    }
  }

  // Starting point from the sample maximum and its half-maximum span.
  const std::size_t peak = static_cast<std::size_t>(ymax_it - values.begin());
  const double off0 = y_lo / y_scale, amp0 = (y_hi - y_lo) / y_scale;
  double left = xs[peak], right = xs[peak];
  for (std::size_t i = 0; i < m; ++i)
    if (ys[i] >= off0 + 0.5 * amp0) {
      left = std::min(left, xs[i]);
      right = std::max(right, xs[i]);
    }
  double min_spacing = 2.0;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j)
      if (xs[i] != xs[j]) min_spacing = std::min(min_spacing, std::abs(xs[i] - xs[j]));
  const double width0 = std::max(right - left, min_spacing);

  auto residuals = [&](const Eigen::VectorXd& p, Eigen::VectorXd& r) {
    for (std::size_t i = 0; i < m; ++i)
      r[static_cast<Eigen::Index>(i)] = (ys[i] - lineshape_value(shape, xs[i], p[0], p[1], p[2], p[3])) * ws[i];
  };
  Eigen::VectorXd p0(4);
  p0 << xs[peak], width0, amp0, off0;
  auto lm = levenberg_marquardt(residuals, p0, static_cast<Eigen::Index>(m));

  double cov_scale = 1.0;
  if (sigmas.empty()) cov_scale = fit.dof > 0 ? lm.chi2 / fit.dof : std::numeric_limits<double>::infinity();
  const Eigen::VectorXd sd = (lm.covariance.diagonal() * cov_scale).cwiseSqrt();
  fit.values = {x_mid + lm.params[0] * x_scale, std::abs(lm.params[1]) * x_scale, lm.params[2] * y_scale,
                lm.params[3] * y_scale};
  fit.errors = {sd[0] * x_scale, sd[1] * x_scale, sd[2] * y_scale, sd[3] * y_scale};
  if (sigmas.empty()) {
    // noiseless data: keep uncertainties strictly positive
    for (auto& e : fit.errors) e = std::max(e, 1e-15 * std::abs(x_scale + y_scale));
  }
  fit.residual_norm = std::sqrt(lm.chi2) * (sigmas.empty() ? y_scale : 1.0);
  fit.converged = lm.converged && !lm.singular && std::all_of(fit.errors.begin(), fit.errors.end(), [](double e) {
                    return std::isfinite(e);
                  });
  if (!fit.converged) fit.message = lm.singular ? "singular normal matrix" : "no convergence";
  return fit;
}

/// Single exponential decay amplitude * exp(-(t - t0) / tau) fitted to
/// histogram counts with Poisson weights.
inline FitResult fit_exponential_decay(std::span<const double> times, std::span<const double> counts, double t0 = 0.0) {
  if (times.size() != counts.size() || times.size() < 3)
    throw std::invalid_argument("fit_exponential_decay: need >= 3 matching points");
  // log-linear start
  double sx = 0, sy = 0, sxx = 0, sxy = 0, sw = 0;
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (counts[i] <= 0.0) continue;
    const double w = counts[i];
    const double x = times[i] - t0, y = std::log(counts[i]);
    sw += w;
    sx += w * x;
    sy += w * y;
    sxx += w * x * x;
    sxy += w * x * y;
  }
  const double slope = (sw * sxy - sx * sy) / (sw * sxx - sx * sx);
  const double intercept = (sy - slope * sx) / sw;
  auto residuals = [&](const Eigen::VectorXd& p, Eigen::VectorXd& r) {
    for (std::size_t i = 0; i < times.size(); ++i) {
      const double model = p[0] * std::exp(-(times[i] - t0) / p[1]);
      r[static_cast<Eigen::Index>(i)] = (counts[i] - model) / std::sqrt(std::max(counts[i], 1.0));
    }
  };
  Eigen::VectorXd p0(2);
  p0 << std::exp(intercept), slope < 0.0 ? -1.0 / slope : 1.0;
  const auto lm = levenberg_marquardt(residuals, p0, static_cast<Eigen::Index>(times.size()));
  FitResult fit;
  fit.names = {"amplitude", "tau"};
  fit.values = {lm.params[0], lm.params[1]};
  fit.errors = {std::sqrt(lm.covariance(0, 0)), std::sqrt(lm.covariance(1, 1))};
  fit.residual_norm = std::sqrt(lm.chi2);
  fit.dof = static_cast<int>(times.size()) - 2;
  fit.converged = lm.converged && !lm.singular;
  return fit;
}

// ---------------------------------------------------------------------------

/// Effective spin-mixing rate (1/ns) from the monitored-state populations
/// after preparing the opposite (n1) and the same (n2) state.
inline double mixing_rate(double n1, double n2, double pulse_ns) {
  if (n1 < 0.0 || n2 < 0.0) throw std::invalid_argument("mixing_rate: populations must be >= 0");
  if (!(pulse_ns > 0.0)) throw std::invalid_argument("mixing_rate: pulse duration must be > 0");
  if (!(n1 < n2)) throw std::domain_error("mixing_rate: requires n1 < n2 (preparation labels inverted?)");
  return std::log((n2 + n1) / (n2 - n1)) / (2.0 * pulse_ns);
}

/// First-order propagation of population uncertainties into mixing_rate.
inline double mixing_rate_stderr(double n1, double n2, double sd1, double sd2, double pulse_ns) {
  mixing_rate(n1, n2, pulse_ns);
  const double d1 = (1.0 / (n2 + n1) + 1.0 / (n2 - n1)) / (2.0 * pulse_ns);
  const double d2 = (1.0 / (n2 + n1) - 1.0 / (n2 - n1)) / (2.0 * pulse_ns);
  return std::hypot(d1 * sd1, d2 * sd2);
}

struct PiPulseSd {
  double sigma_hz = 0.0;  ///< standard deviation of the frequency excursion
  double fwhm_hz = 0.0;   ///< the same excursion quoted as a Gaussian FWHM
};

/// Spectral wander accumulated over one pi pulse, from the per-pulse rate A
/// of excitation pulses of length t_pulse.
inline PiPulseSd pi_pulse_sd_bound(double a, double t_pulse_ns, double t_pi_ns, double sigma_inhom_hz) {
  if (!(a >= 0.0) || !(t_pulse_ns > 0.0) || !(t_pi_ns > 0.0) || !(sigma_inhom_hz > 0.0))
    throw std::invalid_argument("pi_pulse_sd_bound: arguments must be positive");
  const double alpha_t = a / t_pulse_ns * t_pi_ns;
  const double sigma = sigma_inhom_hz * std::sqrt(-std::expm1(-2.0 * alpha_t));
  return {sigma, kFwhmPerSigma * sigma};
}

}  // namespace sdiff
