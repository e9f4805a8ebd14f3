#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace htecheck {

/// Observed sample (Y, D, X, Z). W = (X, Z) is formed on demand.
struct Dataset {
  Eigen::VectorXd y;
  Eigen::VectorXd d;
  Eigen::MatrixXd x;  // n x p, p may be 0
  Eigen::MatrixXd z;  // n x q
  std::optional<Eigen::VectorXd> known_propensity;

  Eigen::Index size() const { return y.size(); }

  Eigen::MatrixXd w() const {
    Eigen::MatrixXd out(size(), x.cols() + z.cols());
    out.leftCols(x.cols()) = x;
    out.rightCols(z.cols()) = z;
    return out;
  }

  void validate() const {
    const Eigen::Index n = size();
    if (n < 2) throw std::invalid_argument("dataset needs at least two observations");
    if (d.size() != n || x.rows() != n || z.rows() != n)
      throw std::invalid_argument("dataset components have inconsistent lengths");
    if (x.cols() + z.cols() == 0) throw std::invalid_argument("dataset has no covariates");
    for (Eigen::Index i = 0; i < n; ++i)
      if (d[i] != 0.0 && d[i] != 1.0) throw std::invalid_argument("treatment must be binary (0/1)");
    if (!y.allFinite() || !x.allFinite() || !z.allFinite())
      throw std::invalid_argument("dataset contains non-finite values");
    if (known_propensity && known_propensity->size() != n)
      throw std::invalid_argument("known propensity column has the wrong length");
  }
};

}  // namespace htecheck
