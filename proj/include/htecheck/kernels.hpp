#pragma once

#include <cmath>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace htecheck {

enum class KernelFamily { kEpanechnikov, kGaussian };

inline std::string to_string(KernelFamily f) {
  return f == KernelFamily::kEpanechnikov ? "epanechnikov" : "gaussian";
}

/// Product kernel of a given family and order over `dim` coordinates.
struct KernelSpec {
  KernelFamily family = KernelFamily::kEpanechnikov;
  int order = 2;
  int dim = 1;

  void validate() const {
    if (dim < 1) throw std::invalid_argument("kernel dimension must be >= 1");
    if (order < 2 || order % 2 != 0)
      throw std::invalid_argument("kernel order must be a positive even integer >= 2");
    if (order != 2) throw std::invalid_argument("only second-order kernels are supported");
  }
};

namespace detail {

inline double univariate_kernel(KernelFamily family, double u) noexcept {
  switch (family) {
    case KernelFamily::kEpanechnikov:
      return std::abs(u) <= 1.0 ? 0.75 * (1.0 - u * u) : 0.0;
    case KernelFamily::kGaussian:
      return std::exp(-0.5 * u * u) / std::sqrt(2.0 * std::numbers::pi);
  }
  return 0.0;
}

}  // namespace detail

inline double evaluate_kernel(const KernelSpec& spec, std::span<const double> u) {
  if (static_cast<int>(u.size()) != spec.dim)
    throw std::invalid_argument("kernel argument has dimension " + std::to_string(u.size()) +
                                ", expected " + std::to_string(spec.dim));
  double k = 1.0;
  for (double v : u) {
    k *= detail::univariate_kernel(spec.family, v);
    if (k == 0.0) break;
  }
  return k;
}

/// K_h(diff) = K(diff / h) / h^p.
inline double scaled_kernel(const KernelSpec& spec, std::span<const double> diff, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("bandwidth must be positive");
  if (static_cast<int>(diff.size()) != spec.dim)
    throw std::invalid_argument("kernel argument has dimension " + std::to_string(diff.size()) +
                                ", expected " + std::to_string(spec.dim));
  double k = 1.0;
  for (double v : diff) {
    k *= detail::univariate_kernel(spec.family, v / h) / h;
    if (k == 0.0) break;
  }
  return k;
}

/// h = multiplier * sigma * n^exponent, sigma the mean per-column sample sd.
struct BandwidthRule {
  double multiplier = 1.0;
  double exponent = -0.25;
};

inline double pooled_sd(const Eigen::MatrixXd& x) {
  const auto n = x.rows();
  if (n < 2) throw std::invalid_argument("bandwidth requires at least two observations");
  if (x.cols() == 0) throw std::invalid_argument("bandwidth requires at least one covariate");
  double total = 0.0;
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    const double mean = x.col(c).mean();
    const double ss = (x.col(c).array() - mean).square().sum();
    total += std::sqrt(ss / static_cast<double>(n - 1));
  }
  return total / static_cast<double>(x.cols());
}

inline double bandwidth(const BandwidthRule& rule, const Eigen::MatrixXd& x) {
  if (!(rule.multiplier > 0.0)) throw std::invalid_argument("bandwidth multiplier must be positive");
  const double sigma = pooled_sd(x);
  if (!(sigma > 0.0)) throw std::invalid_argument("covariates have zero variance; bandwidth would be 0");
  return rule.multiplier * sigma * std::pow(static_cast<double>(x.rows()), rule.exponent);
}

}  // namespace htecheck
