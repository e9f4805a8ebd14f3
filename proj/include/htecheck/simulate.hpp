#pragma once

// Data-generating processes for size/power studies and the Monte Carlo grid
// runner.
//
//   X ~ N(0, 1), Z ~ N(0, Sigma) with Sigma_jk = 0.5^|j-k|, X independent of Z
//   P(D = 1 | W) = logistic(alpha^T W), alpha = 1_{1+q} / sqrt(1 + q)
//   Y(0) = 0, Y = D Y(1), beta = 1_q / sqrt(q), eps ~ N(0, 1)
//
//   DGP 1: Y(1) = 1{X + a (beta^T Z)^3 + eps > 0}
//   DGP 2: Y(1) = 1{X + 2a sin(beta^T Z) + eps > 0}
//   DGP 3: Y(1) = 2X^2 - X + a (beta^T Z)^3 + eps
//   DGP 4: Y(1) = 2X^2 - X + 4a sin(beta^T Z) + eps

#include <bit>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/special_functions/erf.hpp>

#include "htecheck/dataset.hpp"
#include "htecheck/hte_test.hpp"
#include "htecheck/parallel.hpp"
#include "htecheck/rng.hpp"

namespace htecheck {

struct DgpConfig {
  int dgp = 1;
  Eigen::Index n = 200;
  Eigen::Index q = 3;
  double a = 0.0;
  std::uint64_t seed = 1;

  void validate() const {
    if (dgp < 1 || dgp > 4) throw std::invalid_argument("unknown DGP id " + std::to_string(dgp));
    if (n < 10) throw std::invalid_argument("DGP sample size must be >= 10");
    if (q < 1) throw std::invalid_argument("DGP needs q >= 1");
    if (!(a >= 0.0)) throw std::invalid_argument("deviation magnitude a must be >= 0");
  }
};

inline bool binary_response(int dgp) { return dgp == 1 || dgp == 2; }

/// Sigma_jk = 0.5^|j - k|.
inline Eigen::MatrixXd z_covariance(Eigen::Index q) {
  Eigen::MatrixXd s(q, q);
  for (Eigen::Index j = 0; j < q; ++j)
    for (Eigen::Index k = 0; k < q; ++k) s(j, k) = std::pow(0.5, static_cast<double>(std::abs(j - k)));
  return s;
}

struct Covariates {
  Eigen::MatrixXd x;  // n x 1
  Eigen::MatrixXd z;  // n x q
};

inline Covariates gen_covariates(Eigen::Index n, Eigen::Index q, Stream& rng) {
  if (q < 1) throw std::invalid_argument("q must be >= 1");
  const Eigen::MatrixXd chol = z_covariance(q).llt().matrixL();
  Covariates c{Eigen::MatrixXd(n, 1), Eigen::MatrixXd(n, q)};
  for (Eigen::Index i = 0; i < n; ++i) c.x(i, 0) = rng.normal();
  Eigen::VectorXd e(q);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index k = 0; k < q; ++k) e[k] = rng.normal();
    c.z.row(i) = (chol * e).transpose();
  }
  return c;
}

/// logistic(alpha^T W_i) for W = (X, Z), alpha the normalized ones vector.
inline Eigen::VectorXd treatment_probability(const Eigen::MatrixXd& x, const Eigen::MatrixXd& z) {
  const double alpha = 1.0 / std::sqrt(static_cast<double>(x.cols() + z.cols()));
  Eigen::VectorXd p(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    p[i] = detail::logistic(alpha * (x.row(i).sum() + z.row(i).sum()));
  return p;
}

inline Eigen::VectorXd gen_treatment(const Eigen::MatrixXd& x, const Eigen::MatrixXd& z, Stream& rng) {
  if (x.rows() != z.rows()) throw std::invalid_argument("X and Z row counts differ");
  const Eigen::VectorXd p = treatment_probability(x, z);
  Eigen::VectorXd d(p.size());
  for (Eigen::Index i = 0; i < p.size(); ++i) d[i] = rng.bernoulli(p[i]) ? 1.0 : 0.0;
  return d;
}

/// beta^T Z_i with beta = 1_q / sqrt(q).
inline double beta_index(const Eigen::MatrixXd& z, Eigen::Index i) {
  return z.row(i).sum() / std::sqrt(static_cast<double>(z.cols()));
}

/// Y(1) as a function of (X, beta^T Z, eps).
inline double potential_treated(int dgp, double a, double x, double bz, double eps) {
  switch (dgp) {
    case 1: return x + a * bz * bz * bz + eps > 0.0 ? 1.0 : 0.0;
    case 2: return x + 2.0 * a * std::sin(bz) + eps > 0.0 ? 1.0 : 0.0;
    case 3: return 2.0 * x * x - x + a * bz * bz * bz + eps;
    case 4: return 2.0 * x * x - x + 4.0 * a * std::sin(bz) + eps;
    default: throw std::invalid_argument("unknown DGP id " + std::to_string(dgp));
  }
}

/// E[Y(1) - Y(0) | W] in closed form.
inline double true_cate(int dgp, double a, double x, double bz) {
  const auto phi = [](double v) { return 0.5 * boost::math::erfc(-v / std::sqrt(2.0)); };
  switch (dgp) {
    case 1: return phi(x + a * bz * bz * bz);
    case 2: return phi(x + 2.0 * a * std::sin(bz));
    case 3: return 2.0 * x * x - x + a * bz * bz * bz;
    case 4: return 2.0 * x * x - x + 4.0 * a * std::sin(bz);
    default: throw std::invalid_argument("unknown DGP id " + std::to_string(dgp));
  }
}

struct SimulatedOutcome {
  Eigen::VectorXd y1, y0, y, d;
};

inline SimulatedOutcome dgp_outcome(const DgpConfig& cfg, const Eigen::MatrixXd& x, const Eigen::MatrixXd& z,
                                    Stream& rng) {
  if (cfg.dgp < 1 || cfg.dgp > 4) throw std::invalid_argument("unknown DGP id " + std::to_string(cfg.dgp));
  const Eigen::Index n = x.rows();
  SimulatedOutcome out;
  out.d = gen_treatment(x, z, rng);
  out.y1.resize(n);
  out.y0 = Eigen::VectorXd::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i)
    out.y1[i] = potential_treated(cfg.dgp, cfg.a, x(i, 0), beta_index(z, i), rng.normal());
  out.y = out.d.cwiseProduct(out.y1) + (Eigen::VectorXd::Ones(n) - out.d).cwiseProduct(out.y0);
  return out;
}

/// One simulated sample drawn from Stream(cfg.seed).
inline Dataset simulate_dataset(const DgpConfig& cfg) {
  cfg.validate();
  Stream rng(cfg.seed);
  Covariates c = gen_covariates(cfg.n, cfg.q, rng);
  SimulatedOutcome o = dgp_outcome(cfg, c.x, c.z, rng);
  Dataset data;
  data.y = std::move(o.y);
  data.d = std::move(o.d);
  data.x = std::move(c.x);
  data.z = std::move(c.z);
  return data;
}

struct GridCell {
  int dgp = 1;
  Eigen::Index n = 200;
  Eigen::Index q = 3;
  double a = 0.0;
  double hc = 1.0;

  auto tie() const { return std::tie(dgp, n, q, a, hc); }
  bool operator<(const GridCell& o) const { return tie() < o.tie(); }
  bool operator==(const GridCell& o) const { return tie() == o.tie(); }

  /// Stream index derived from the cell coordinates only.
  std::uint64_t key() const {
    std::uint64_t h = hash_combine(0x6874652d63656c6cULL, static_cast<std::uint64_t>(dgp));
    h = hash_combine(h, static_cast<std::uint64_t>(n));
    h = hash_combine(h, static_cast<std::uint64_t>(q));
    h = hash_combine(h, std::bit_cast<std::uint64_t>(a));
    return hash_combine(h, std::bit_cast<std::uint64_t>(hc));
  }
};

struct ExperimentConfig {
  std::vector<GridCell> cells;
  int mc_runs = 1000;
  int bootstrap_reps = 500;
  std::vector<double> levels{0.05};
  std::uint64_t seed = 1;
  unsigned threads = 0;
  bool intercept = false;  // DGP treatment model has none
  double clamp = 0.01;

  void validate() const {
    if (cells.empty()) throw std::invalid_argument("experiment grid is empty");
    if (mc_runs < 1) throw std::invalid_argument("mc_runs must be >= 1");
    if (bootstrap_reps < 1) throw std::invalid_argument("bootstrap reps must be >= 1");
    if (levels.empty()) throw std::invalid_argument("no significance levels requested");
    for (double l : levels)
      if (!(l > 0.0 && l < 1.0)) throw std::invalid_argument("levels must lie in (0, 1)");
    for (const GridCell& c : cells) {
      DgpConfig{c.dgp, c.n, c.q, c.a, 0}.validate();
      if (!(c.hc > 0.0)) throw std::invalid_argument("bandwidth multiplier must be positive");
    }
  }
};

struct CellResult {
  GridCell cell;
  std::vector<double> levels;
  std::vector<double> rejection_rate;  // parallel to levels
  int mc_runs = 0;
  int bootstrap_reps = 0;
  bool binary = false;
};

struct SimReport {
  std::vector<CellResult> cells;
  int mc_runs = 0;
  int bootstrap_reps = 0;
  std::uint64_t seed = 0;
  std::string normal_method = kNormalMethod;
};

/// Seeds for Monte Carlo run `run` of `cell`: (data seed, bootstrap seed).
inline std::pair<std::uint64_t, std::uint64_t> run_seeds(std::uint64_t master, const GridCell& cell, int run) {
  const Stream s = Stream(master).split(cell.key()).split(static_cast<std::uint64_t>(run));
  return {s.split(0).key(), s.split(1).key()};
}

inline TestConfig simulation_test_config(const ExperimentConfig& cfg, const GridCell& cell, std::uint64_t boot_seed) {
  TestConfig tc;
  tc.propensity.mode = PropensityMode::kLogistic;
  tc.propensity.intercept = cfg.intercept;
  tc.propensity.clamp = cfg.clamp;
  tc.bandwidth.multiplier = cell.hc;
  tc.bootstrap.reps = cfg.bootstrap_reps;
  tc.bootstrap.seed = boot_seed;
  tc.bootstrap.threads = 1;
  tc.bootstrap.levels = cfg.levels;
  return tc;
}

/// Runs one Monte Carlo replication of a cell.
inline TestReport run_replication(const ExperimentConfig& cfg, const GridCell& cell, int run) {
  const auto [data_seed, boot_seed] = run_seeds(cfg.seed, cell, run);
  const Dataset data = simulate_dataset(DgpConfig{cell.dgp, cell.n, cell.q, cell.a, data_seed});
  return run_test(data, simulation_test_config(cfg, cell, boot_seed));
}

inline CellResult run_cell(const ExperimentConfig& cfg, const GridCell& cell) {
  std::vector<double> p_values(static_cast<std::size_t>(cfg.mc_runs));
  parallel_for(p_values.size(), cfg.threads,
               [&](std::size_t r) { p_values[r] = run_replication(cfg, cell, static_cast<int>(r)).p_value; });
  CellResult res;
  res.cell = cell;
  res.levels = cfg.levels;
  res.mc_runs = cfg.mc_runs;
  res.bootstrap_reps = cfg.bootstrap_reps;
  res.binary = binary_response(cell.dgp);
  for (double level : cfg.levels) {
    int rejected = 0;
    for (double p : p_values) rejected += p <= level ? 1 : 0;
    res.rejection_rate.push_back(static_cast<double>(rejected) / static_cast<double>(cfg.mc_runs));
  }
  return res;
}

/// Evaluates every grid cell. Cells found in `completed` are reused rather
/// than recomputed; `on_cell` fires after each newly computed cell.
inline SimReport run_experiment(const ExperimentConfig& cfg, const std::map<GridCell, CellResult>& completed = {},
                                const std::function<void(const CellResult&)>& on_cell = {}) {
  cfg.validate();
  SimReport report;
  report.mc_runs = cfg.mc_runs;
  report.bootstrap_reps = cfg.bootstrap_reps;
  report.seed = cfg.seed;
  for (const GridCell& cell : cfg.cells) {
    if (auto it = completed.find(cell); it != completed.end()) {
      report.cells.push_back(it->second);
      continue;
    }
    CellResult res = run_cell(cfg, cell);
    if (on_cell) on_cell(res);
    report.cells.push_back(std::move(res));
  }
  return report;
}

}  // namespace htecheck
