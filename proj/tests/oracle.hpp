#pragma once

// Brute-force reference implementations used only by the test suites.
// Deliberately written against std::vector with literal loops and no
// htecheck includes, so they share no code with the optimized pipeline.

#include <cmath>
#include <cstddef>
#include <numbers>
#include <random>
#include <vector>

namespace oracle {

using Matrix = std::vector<std::vector<double>>;  // row-major, rows = observations

/// 1/(n(n-1)) sum_i sum_{j != i} e_i e_j / sqrt(1 + |W_i - W_j|^2).
inline double brute_tn(const std::vector<double>& e, const Matrix& w) {
  const std::size_t n = e.size();
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      double d2 = 0.0;
      for (std::size_t k = 0; k < w[i].size(); ++k) d2 += (w[i][k] - w[j][k]) * (w[i][k] - w[j][k]);
      total += e[i] * e[j] / std::sqrt(1.0 + d2);
    }
  }
  return total / (static_cast<double>(n) * static_cast<double>(n - 1));
}

inline double brute_pair_kernel(const std::vector<double>& wi, const std::vector<double>& wj) {
  double d2 = 0.0;
  for (std::size_t k = 0; k < wi.size(); ++k) d2 += std::pow(wi[k] - wj[k], 2);
  return std::pow(1.0 + d2, -0.5);
}

inline double epanechnikov_h(const std::vector<double>& diff, double h) {
  double k = 1.0;
  for (double v : diff) {
    const double u = v / h;
    k *= (u * u <= 1.0) ? 0.75 * (1.0 - u * u) / h : 0.0;
  }
  return k;
}

/// f_hat(X_i) with the 1/(n-1) factor, no floor.
inline std::vector<double> brute_density(const Matrix& x, double h) {
  const std::size_t n = x.size();
  std::vector<double> f(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      std::vector<double> diff(x[i].size());
      for (std::size_t k = 0; k < diff.size(); ++k) diff[k] = x[j][k] - x[i][k];
      f[i] += epanechnikov_h(diff, h);
    }
    f[i] /= static_cast<double>(n - 1);
  }
  return f;
}

/// g_hat(X_i) = sum_{j != i} w_ij Y*_j, w_ij = K_h(X_j - X_i) / ((n-1) f_hat(X_i)).
/// Points with no kernel mass get the leave-one-out mean.
inline std::vector<double> brute_loo(const Matrix& x, const std::vector<double>& ystar, double h) {
  const std::size_t n = x.size();
  const std::vector<double> f = brute_density(x, h);
  std::vector<double> g(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (f[i] <= 1e-10) {
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j)
        if (j != i) s += ystar[j];
      g[i] = s / static_cast<double>(n - 1);
      continue;
    }
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      std::vector<double> diff(x[i].size());
      for (std::size_t k = 0; k < diff.size(); ++k) diff[k] = x[j][k] - x[i][k];
      const double wij = epanechnikov_h(diff, h) / static_cast<double>(n - 1) / f[i];
      g[i] += wij * ystar[j];
    }
  }
  return g;
}

inline double gaussian_pdf(double u) { return std::exp(-0.5 * u * u) / std::sqrt(2.0 * std::numbers::pi); }

/// Monte Carlo estimate of E_alpha[H_h1(alpha^T (w_i - w_j))], alpha ~ N(0, h1^2 I),
/// H the standard normal density and H_h1(u) = H(u / h1) / h1.
inline double mc_projection_integral(const std::vector<double>& wi, const std::vector<double>& wj, double h1,
                                     std::size_t draws, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, h1);
  double total = 0.0;
  for (std::size_t r = 0; r < draws; ++r) {
    double proj = 0.0;
    for (std::size_t k = 0; k < wi.size(); ++k) proj += normal(rng) * (wi[k] - wj[k]);
    total += gaussian_pdf(proj / h1) / h1;
  }
  return total / static_cast<double>(draws);
}

/// The same expectation by 1-D quadrature: alpha^T (w_i - w_j) ~ N(0, h1^2 |w_i - w_j|^2),
/// integrated with composite Simpson on [-12, 12] standard deviations.
inline double quadrature_projection_integral(const std::vector<double>& wi, const std::vector<double>& wj,
                                             double h1) {
  double norm2 = 0.0;
  for (std::size_t k = 0; k < wi.size(); ++k) norm2 += (wi[k] - wj[k]) * (wi[k] - wj[k]);
  const double sd = h1 * std::sqrt(norm2);
  auto integrand = [&](double t) { return gaussian_pdf(t) * gaussian_pdf(sd * t / h1) / h1; };
  const int m = 20000;  // even
  const double a = -12.0, b = 12.0, step = (b - a) / m;
  double s = integrand(a) + integrand(b);
  for (int k = 1; k < m; ++k) s += (k % 2 == 1 ? 4.0 : 2.0) * integrand(a + k * step);
  return s * step / 3.0;
}

}  // namespace oracle
