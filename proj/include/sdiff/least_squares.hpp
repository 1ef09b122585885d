#pragma once

// Small optimizers: golden-section search for one parameter and a damped
// Gauss-Newton (Levenberg-Marquardt) solver with central-difference
// Jacobians for a handful of parameters.

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <limits>
#include <utility>

namespace sdiff {

struct ScalarMinimum {
  double x = 0.0;
  double f = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Minimize a unimodal f on [lo, hi] to relative tolerance `rel_tol`.
template <class F>
ScalarMinimum golden_section_minimize(F&& f, double lo, double hi, double rel_tol = 1e-9, int max_iter = 500) {
  constexpr double kInvPhi = 0.6180339887498949;
  double a = lo, b = hi;
  double c = b - kInvPhi * (b - a);
  double d = a + kInvPhi * (b - a);
  double fc = f(c), fd = f(d);
  ScalarMinimum out;
  for (out.iterations = 0; out.iterations < max_iter; ++out.iterations) {
    if (std::abs(b - a) <= rel_tol * (std::abs(c) + std::abs(d)) + 1e-300) {
      out.converged = true;
      break;
    }
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kInvPhi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kInvPhi * (b - a);
      fd = f(d);
    }
  }
  if (fc < fd) {
    out.x = c;
    out.f = fc;
  } else {
    out.x = d;
    out.f = fd;
  }
  return out;
}

struct LmOptions {
  int max_iterations = 500;
  double rel_tol = 1e-9;      ///< on the parameter step
  double initial_damping = 1e-3;
};

struct LmResult {
  Eigen::VectorXd params;
  Eigen::MatrixXd covariance;  ///< (J^T J)^-1 at the solution, unscaled
  double chi2 = std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool converged = false;
  bool singular = false;
};

/// Minimize |r(p)|^2 where `residuals(p, r)` fills r (size m).
template <class Residuals>
LmResult levenberg_marquardt(Residuals&& residuals, Eigen::VectorXd p, Eigen::Index m, const LmOptions& opt = {}) {
  const Eigen::Index n = p.size();
  Eigen::VectorXd r(m), r_trial(m), r_plus(m), r_minus(m);
  auto jacobian = [&](const Eigen::VectorXd& at) {
    Eigen::MatrixXd J(m, n);
    for (Eigen::Index j = 0; j < n; ++j) {
      const double h = 1e-6 * std::max(std::abs(at[j]), 1e-3);
      Eigen::VectorXd hi = at, lo = at;
      hi[j] += h;
      lo[j] -= h;
      residuals(hi, r_plus);
      residuals(lo, r_minus);
      J.col(j) = (r_plus - r_minus) / (2.0 * h);
    }
    return J;
  };

  LmResult out;
  residuals(p, r);
  double chi2 = r.squaredNorm();
  double lambda = opt.initial_damping;
  for (out.iterations = 0; out.iterations < opt.max_iterations; ++out.iterations) {
    const Eigen::MatrixXd J = jacobian(p);
    const Eigen::MatrixXd JtJ = J.transpose() * J;
    const Eigen::VectorXd g = J.transpose() * r;
    bool improved = false;
    double rel_step = 0.0;
    while (lambda < 1e16) {
      Eigen::MatrixXd A = JtJ;
      A.diagonal() += lambda * JtJ.diagonal().cwiseMax(1e-12);
      const Eigen::VectorXd step = A.ldlt().solve(-g);
      const Eigen::VectorXd trial = p + step;
      residuals(trial, r_trial);
      const double chi2_trial = r_trial.squaredNorm();
      if (std::isfinite(chi2_trial) && chi2_trial <= chi2) {
        rel_step = (step.array().abs() / (p.array().abs() + 1e-12)).maxCoeff();
        p = trial;
        r = r_trial;
        chi2 = chi2_trial;
        lambda = std::max(lambda / 10.0, 1e-12);
        improved = true;
        break;
      }
      lambda *= 10.0;
    }
    // No downhill step at any damping: p is stationary.
    if (!improved || rel_step < opt.rel_tol) {
      out.converged = true;
      break;
    }
  }
  out.params = p;
  out.chi2 = chi2;
  const Eigen::MatrixXd J = jacobian(p);
  const Eigen::MatrixXd JtJ = J.transpose() * J;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(JtJ);
  out.singular = !lu.isInvertible();
  out.covariance = out.singular ? Eigen::MatrixXd::Constant(n, n, std::numeric_limits<double>::infinity())
                                : Eigen::MatrixXd(lu.inverse());
  return out;
}

}  // namespace sdiff
