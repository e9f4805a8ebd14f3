#pragma once

// Leave-one-out Nadaraya-Watson estimation of g(X) = E(Y* | X).
//
// The leave-one-out weights depend only on X and h, so they are assembled
// once into a row-stochastic smoother matrix S with zero diagonal and reused
// for every response vector (original sample and all bootstrap replicates):
// g_hat = S * y.

#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "htecheck/kernels.hpp"

namespace htecheck {

inline constexpr double kDensityFloor = 1e-10;

/// What E(Y* | X) means when X is empty.
enum class EmptyCovariateMode {
  kConstant,  // g is the (leave-one-out) mean of Y*: H0 "CATE is constant"
  kZero,      // g is identically zero: H0 "CATE is zero"
};

namespace detail {

inline Eigen::MatrixXd pairwise_kernel_sums(const Eigen::MatrixXd& x, double h, const KernelSpec& spec) {
  if (!(h > 0.0)) throw std::invalid_argument("bandwidth must be positive");
  if (x.cols() != spec.dim)
    throw std::invalid_argument("covariate width does not match kernel dimension");
  const Eigen::Index n = x.rows();
  const Eigen::Index p = x.cols();
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(n, n);
  std::vector<double> diff(static_cast<std::size_t>(p));
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < j; ++i) {
      for (Eigen::Index c = 0; c < p; ++c) diff[static_cast<std::size_t>(c)] = x(j, c) - x(i, c);
      const double v = scaled_kernel(spec, diff, h);
      k(i, j) = v;
      k(j, i) = v;
    }
  }
  return k;
}

}  // namespace detail

/// f_hat(X_i) = 1/(n-1) sum_{j != i} K_h(X_j - X_i), floored at kDensityFloor.
inline Eigen::VectorXd loo_density(const Eigen::MatrixXd& x, double h, const KernelSpec& spec) {
  if (x.rows() < 2) throw std::invalid_argument("leave-one-out density needs n >= 2");
  const Eigen::MatrixXd k = detail::pairwise_kernel_sums(x, h, spec);
  Eigen::VectorXd f = k.rowwise().sum() / static_cast<double>(x.rows() - 1);
  return f.cwiseMax(kDensityFloor);
}

class LooSmoother {
 public:
  using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  /// Kernel smoother on covariates `x` (n x p, p >= 1).
  LooSmoother(const Eigen::MatrixXd& x, double h, const KernelSpec& spec) : bandwidth_(h) {
    const Eigen::Index n = x.rows();
    if (n < 2) throw std::invalid_argument("leave-one-out regression needs n >= 2");
    const Eigen::MatrixXd k = detail::pairwise_kernel_sums(x, h, spec);
    const double inv_nm1 = 1.0 / static_cast<double>(n - 1);
    weights_.resize(n, n);
    density_.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double f = k.row(i).sum() * inv_nm1;
      density_[i] = std::max(f, kDensityFloor);
      if (f > kDensityFloor) {
        weights_.row(i) = k.row(i) * (inv_nm1 / f);
      } else {
        // No kernel mass: fall back to the leave-one-out mean.
        weights_.row(i).setConstant(inv_nm1);
        weights_(i, i) = 0.0;
        ++degenerate_;
      }
    }
  }

  /// Smoother for empty X.
  LooSmoother(Eigen::Index n, EmptyCovariateMode mode) : bandwidth_(0.0) {
    if (n < 2) throw std::invalid_argument("leave-one-out regression needs n >= 2");
    const double inv_nm1 = 1.0 / static_cast<double>(n - 1);
    weights_ = mode == EmptyCovariateMode::kZero ? RowMatrix::Zero(n, n) : RowMatrix::Constant(n, n, inv_nm1);
    weights_.diagonal().setZero();
    density_ = Eigen::VectorXd::Ones(n);
  }

  Eigen::Index size() const { return weights_.rows(); }
  double bandwidth() const { return bandwidth_; }
  int degenerate_count() const { return degenerate_; }
  const RowMatrix& weights() const { return weights_; }
  const Eigen::VectorXd& density() const { return density_; }

  /// g_hat_i = sum_{j != i} w_ij y_j.
  Eigen::VectorXd fit(const Eigen::VectorXd& y) const {
    if (y.size() != size()) throw std::invalid_argument("response length does not match smoother");
    return weights_ * y;
  }

 private:
  RowMatrix weights_;
  Eigen::VectorXd density_;
  double bandwidth_;
  int degenerate_ = 0;
};

inline Eigen::VectorXd loo_regress(const Eigen::MatrixXd& x, const Eigen::VectorXd& ystar, double h,
                                   const KernelSpec& spec) {
  if (x.cols() == 0) return LooSmoother(ystar.size(), EmptyCovariateMode::kConstant).fit(ystar);
  if (x.rows() != ystar.size()) throw std::invalid_argument("covariate rows do not match response length");
  return LooSmoother(x, h, spec).fit(ystar);
}

inline Eigen::VectorXd residuals(const Eigen::VectorXd& ystar, const Eigen::VectorXd& ghat) {
  if (ystar.size() != ghat.size()) throw std::invalid_argument("residual inputs differ in length");
  return ystar - ghat;
}

struct ResidualSet {
  Eigen::VectorXd ystar;
  Eigen::VectorXd ghat;
  Eigen::VectorXd density;
  Eigen::VectorXd resid;
  double bandwidth = 0.0;
  int degenerate = 0;
};

inline ResidualSet compute_residuals(const LooSmoother& smoother, const Eigen::VectorXd& ystar) {
  ResidualSet out;
  out.ystar = ystar;
  out.ghat = smoother.fit(ystar);
  out.density = smoother.density();
  out.resid = residuals(ystar, out.ghat);
  out.bandwidth = smoother.bandwidth();
  out.degenerate = smoother.degenerate_count();
  return out;
}

}  // namespace htecheck
