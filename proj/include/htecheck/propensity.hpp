#pragma once

// Parametric propensity score: logistic maximum likelihood, clamping into a
// common-support band, and the inverse-probability-weighted outcome.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "htecheck/errors.hpp"

namespace htecheck {

enum class PropensityMode { kLogistic, kKnownConstant, kKnownColumn };

struct PropensitySpec {
  PropensityMode mode = PropensityMode::kLogistic;
  double constant = 0.5;  // kKnownConstant only
  double clamp = 0.01;
  bool intercept = true;  // kLogistic only

  void validate() const {
    if (!(clamp > 0.0 && clamp < 0.5)) throw std::invalid_argument("clamp bound must lie in (0, 0.5)");
    if (mode == PropensityMode::kKnownConstant && !(constant > 0.0 && constant < 1.0))
      throw std::invalid_argument("known propensity constant must lie in (0, 1)");
  }

  std::string describe() const {
    switch (mode) {
      case PropensityMode::kLogistic:
        return intercept ? "logistic" : "logistic-no-intercept";
      case PropensityMode::kKnownConstant:
        return "known:" + std::to_string(constant);
      case PropensityMode::kKnownColumn:
        return "known-column";
    }
    return "";
  }
};

struct LogisticOptions {
  bool intercept = true;
  int max_iterations = 100;
  double gradient_tolerance = 1e-8;
};

struct PropensityFit {
  Eigen::VectorXd coef;         // intercept first when present
  Eigen::MatrixXd information;  // (1/n) sum pi(1-pi) w w^T at coef
  Eigen::VectorXd fitted;       // unclamped pi(W_i, coef)
  bool intercept = true;
  bool converged = false;
  int iterations = 0;
  double gradient_norm = 0.0;
  std::vector<double> loglik_trace;  // mean log-likelihood after each accepted step
};

namespace detail {

inline Eigen::MatrixXd design(const Eigen::MatrixXd& w, bool intercept) {
  if (!intercept) return w;
  Eigen::MatrixXd out(w.rows(), w.cols() + 1);
  out.col(0).setOnes();
  out.rightCols(w.cols()) = w;
  return out;
}

inline double logistic(double eta) noexcept {
  return eta >= 0.0 ? 1.0 / (1.0 + std::exp(-eta)) : std::exp(eta) / (1.0 + std::exp(eta));
}

// log(1 + exp(eta)) without overflow.
inline double log1pexp(double eta) noexcept {
  return eta > 0.0 ? eta + std::log1p(std::exp(-eta)) : std::log1p(std::exp(eta));
}

inline double mean_loglik(const Eigen::MatrixXd& x, const Eigen::VectorXd& d, const Eigen::VectorXd& coef) {
  const Eigen::VectorXd eta = x * coef;
  double ll = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) ll += d[i] * eta[i] - log1pexp(eta[i]);
  return ll / static_cast<double>(eta.size());
}

}  // namespace detail

/// Logistic MLE by damped Newton-Raphson with step halving.
inline PropensityFit fit_logistic(const Eigen::MatrixXd& w, const Eigen::VectorXd& d,
                                  const LogisticOptions& opts = {}) {
  const Eigen::Index n = w.rows();
  if (d.size() != n) throw std::invalid_argument("treatment length does not match covariate rows");
  for (Eigen::Index i = 0; i < n; ++i)
    if (d[i] != 0.0 && d[i] != 1.0) throw std::invalid_argument("treatment must be binary (0/1)");
  const double treated = d.sum();
  if (treated == 0.0 || treated == static_cast<double>(n))
    throw std::invalid_argument("treatment is constant; propensity model is not identified");

  const Eigen::MatrixXd x = detail::design(w, opts.intercept);
  const Eigen::Index k = x.cols();
  if (k == 0) throw std::invalid_argument("propensity model has no parameters");
  if (n <= k) throw std::invalid_argument("need more observations than propensity parameters");

  PropensityFit fit;
  fit.intercept = opts.intercept;
  fit.coef = Eigen::VectorXd::Zero(k);
  double ll = detail::mean_loglik(x, d, fit.coef);
  fit.loglik_trace.push_back(ll);

  const double inv_n = 1.0 / static_cast<double>(n);
  Eigen::VectorXd p(n), grad(k);
  Eigen::MatrixXd hess(k, k);
  auto evaluate = [&](const Eigen::VectorXd& coef) {
    const Eigen::VectorXd eta = x * coef;
    for (Eigen::Index i = 0; i < n; ++i) p[i] = detail::logistic(eta[i]);
    grad = x.transpose() * (d - p) * inv_n;
    const Eigen::VectorXd v = (p.array() * (1.0 - p.array())).matrix();
    hess = x.transpose() * v.asDiagonal() * x * inv_n;
  };

  evaluate(fit.coef);
  for (int it = 0; it < opts.max_iterations; ++it) {
    fit.gradient_norm = grad.norm();
    if (fit.gradient_norm <= opts.gradient_tolerance) {
      fit.converged = true;
      break;
    }
    Eigen::LDLT<Eigen::MatrixXd> ldlt(hess);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive())
      throw NumericError("propensity information matrix is singular (collinear covariates or separation)");
    const Eigen::VectorXd step = ldlt.solve(grad);
    if (!step.allFinite()) throw NumericError("propensity Newton step is not finite");

    // Near the optimum the log-likelihood is flat to rounding; a full step
    // that loses only rounding noise is still taken.
    const double slack = 64.0 * std::numeric_limits<double>::epsilon() * std::abs(ll);
    double scale = 1.0;
    Eigen::VectorXd trial = fit.coef + step;
    double trial_ll = detail::mean_loglik(x, d, trial);
    if (trial_ll < ll && trial_ll >= ll - slack) trial_ll = ll;
    while (!(trial_ll >= ll) && scale > 1e-10) {
      scale *= 0.5;
      trial = fit.coef + scale * step;
      trial_ll = detail::mean_loglik(x, d, trial);
    }
    if (!(trial_ll >= ll)) break;  // no ascent direction left at working precision
    fit.coef = trial;
    ll = trial_ll;
    fit.loglik_trace.push_back(ll);
    fit.iterations = it + 1;
    evaluate(fit.coef);
  }
  fit.gradient_norm = grad.norm();
  fit.converged = fit.gradient_norm <= opts.gradient_tolerance;

  // Under (quasi-)separation the likelihood climbs toward 0 while fitted
  // probabilities collapse onto 0/1; the MLE does not exist.
  const double min_var = (p.array() * (1.0 - p.array())).minCoeff();
  const bool separated = ll > -1e-6 || min_var < 1e-14 || !fit.coef.allFinite();
  if (!fit.converged || separated)
    throw NumericError("logistic propensity fit did not converge after " +
                       std::to_string(fit.iterations) + " iterations (gradient norm " +
                       std::to_string(fit.gradient_norm) + "); data may be separable");

  fit.fitted = p;
  fit.information = hess;
  return fit;
}

/// pi(W, coef) for new covariates under an existing fit (unclamped).
inline Eigen::VectorXd predict_propensity(const PropensityFit& fit, const Eigen::MatrixXd& w) {
  const Eigen::MatrixXd x = detail::design(w, fit.intercept);
  if (x.cols() != fit.coef.size()) throw std::invalid_argument("covariate width does not match fit");
  const Eigen::VectorXd eta = x * fit.coef;
  return eta.unaryExpr([](double e) { return detail::logistic(e); });
}

struct ClampedPropensities {
  Eigen::VectorXd values;
  int clamped = 0;
};

inline ClampedPropensities clamp_propensities(const Eigen::VectorXd& raw, double bound) {
  ClampedPropensities out{raw, 0};
  for (double& v : out.values) {
    const double c = std::clamp(v, bound, 1.0 - bound);
    if (c != v) ++out.clamped;
    v = c;
  }
  return out;
}

/// Fitted or known propensities, clamped into [clamp, 1 - clamp].
/// `fit` is required for kLogistic and `column` for kKnownColumn.
inline ClampedPropensities propensities(const PropensitySpec& spec, Eigen::Index n,
                                        const PropensityFit* fit = nullptr,
                                        const Eigen::VectorXd* column = nullptr) {
  spec.validate();
  switch (spec.mode) {
    case PropensityMode::kKnownConstant:
      return clamp_propensities(Eigen::VectorXd::Constant(n, spec.constant), spec.clamp);
    case PropensityMode::kKnownColumn: {
      if (column == nullptr || column->size() != n)
        throw std::invalid_argument("known-column propensity requires a column of length n");
      for (double v : *column)
        if (!(v > 0.0 && v < 1.0)) throw std::invalid_argument("known propensity values must lie in (0, 1)");
      return clamp_propensities(*column, spec.clamp);
    }
    case PropensityMode::kLogistic:
      if (fit == nullptr || fit->fitted.size() != n)
        throw std::invalid_argument("logistic propensity requires a fit on the same sample");
      return clamp_propensities(fit->fitted, spec.clamp);
  }
  throw std::invalid_argument("unknown propensity mode");
}

/// Y* = D Y / pi - (1 - D) Y / (1 - pi).
inline Eigen::VectorXd transform_outcome(const Eigen::VectorXd& y, const Eigen::VectorXd& d,
                                         const Eigen::VectorXd& pi) {
  if (y.size() != d.size() || y.size() != pi.size())
    throw std::invalid_argument("outcome, treatment and propensity lengths differ");
  Eigen::VectorXd out(y.size());
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (!(pi[i] > 0.0 && pi[i] < 1.0)) throw std::invalid_argument("propensity must lie in (0, 1)");
    out[i] = d[i] * y[i] / pi[i] - (1.0 - d[i]) * y[i] / (1.0 - pi[i]);
  }
  return out;
}

}  // namespace htecheck
