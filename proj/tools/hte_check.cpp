// hte-check: command-line front end.
//
//   hte-check test      run the heterogeneity test on a CSV dataset
//   hte-check simulate  run a Monte Carlo size/power grid
//   hte-check validate  propensity overlap and missing-value diagnostics
//
// Exit codes: 0 ok, 1 diagnostic failure, 2 input error, 3 numeric error.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "htecheck/errors.hpp"
#include "htecheck/hte_test.hpp"
#include "htecheck/io.hpp"
#include "htecheck/simulate.hpp"

namespace {

using namespace htecheck;

constexpr int kExitDiagnostic = 1;
constexpr int kExitInput = 2;
constexpr int kExitNumeric = 3;

struct DataArgs {
  std::string input;
  ColumnRoles roles;
  std::string propensity = "logistic";
  double clamp = 0.01;
};

void add_data_options(CLI::App* cmd, DataArgs& a) {
  cmd->add_option("--input", a.input, "CSV file with a header row")->required();
  cmd->add_option("--outcome", a.roles.outcome, "outcome column")->required();
  cmd->add_option("--treatment", a.roles.treatment, "binary (0/1) treatment column")->required();
  cmd->add_option("--x", a.roles.x, "columns of X (comma separated)")->delimiter(',');
  cmd->add_option("--z", a.roles.z, "columns of Z (comma separated)")->delimiter(',');
  cmd->add_option("--propensity", a.propensity,
                  "logistic | logistic-no-intercept | known:<c> | column:<name>")
      ->capture_default_str();
  cmd->add_option("--clamp", a.clamp, "propensity clamp bound in (0, 0.5)")->capture_default_str();
}

PropensitySpec parse_propensity(DataArgs& a) {
  PropensitySpec spec;
  spec.clamp = a.clamp;
  const std::string& s = a.propensity;
  if (s == "logistic") {
    spec.mode = PropensityMode::kLogistic;
  } else if (s == "logistic-no-intercept") {
    spec.mode = PropensityMode::kLogistic;
    spec.intercept = false;
  } else if (s.rfind("known:", 0) == 0) {
    spec.mode = PropensityMode::kKnownConstant;
    try {
      spec.constant = std::stod(s.substr(6));
    } catch (const std::exception&) {
      throw InputError("cannot parse propensity constant in '" + s + "'");
    }
  } else if (s.rfind("column:", 0) == 0) {
    spec.mode = PropensityMode::kKnownColumn;
    a.roles.propensity = s.substr(7);
  } else {
    throw InputError("unknown propensity mode '" + s + "'");
  }
  spec.validate();
  return spec;
}

int cmd_test(DataArgs& a, double hc, int reps, std::uint64_t seed, const std::vector<double>& levels,
             unsigned threads, const std::string& empty_x, const std::string& out_path) {
  TestConfig cfg;
  cfg.propensity = parse_propensity(a);
  cfg.bandwidth.multiplier = hc;
  cfg.bootstrap.reps = reps;
  cfg.bootstrap.seed = seed;
  cfg.bootstrap.levels = levels;
  cfg.bootstrap.threads = threads;
  if (empty_x == "zero") cfg.empty_x = EmptyCovariateMode::kZero;
  else if (empty_x != "constant") throw InputError("--empty-x must be 'constant' or 'zero'");
  for (double l : levels)
    if (!(l > 0.0 && l < 1.0)) throw InputError("levels must lie in (0, 1)");

  const LoadedData loaded = load_dataset(read_csv_file(a.input), a.roles);
  const TestReport report = run_test(loaded.data, cfg);

  auto j = report_to_json(report);
  j["config"]["input"] = a.input;
  j["config"]["outcome"] = a.roles.outcome;
  j["config"]["treatment"] = a.roles.treatment;
  j["config"]["x"] = a.roles.x;
  j["config"]["z"] = a.roles.z;
  j["config"]["empty_x"] = empty_x;
  j["diagnostics"]["dropped_rows"] = loaded.dropped_rows;
  j["diagnostics"]["missing"] = loaded.missing;
  const std::string text = j.dump(2) + "\n";
  if (out_path.empty() || out_path == "-") {
    std::cout << text;
  } else {
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw InputError("cannot write report '" + out_path + "'");
    out << text;
    std::cerr << "T_n = " << format_double(report.t_n) << ", p-value = " << format_double(report.p_value)
              << " (report written to " << out_path << ")\n";
  }
  return 0;
}

int cmd_validate(DataArgs& a, double max_clamp_fraction) {
  const PropensitySpec spec = parse_propensity(a);
  const LoadedData loaded = load_dataset(read_csv_file(a.input), a.roles);
  const Dataset& data = loaded.data;
  data.validate();
  const auto n = data.size();
  std::cout << "rows used: " << n << ", dropped (missing values): " << loaded.dropped_rows << "\n";
  for (const auto& [col, count] : loaded.missing) std::cout << "  missing in '" << col << "': " << count << "\n";
  std::cout << "treated fraction: " << format_double(data.d.mean()) << "\n";

  if (spec.mode == PropensityMode::kKnownConstant) {
    std::cout << "propensity is a known constant; overlap check skipped\n";
    return 0;
  }
  ClampedPropensities pi;
  Eigen::VectorXd raw;
  if (spec.mode == PropensityMode::kLogistic) {
    LogisticOptions lo;
    lo.intercept = spec.intercept;
    const PropensityFit fit = fit_logistic(data.w(), data.d, lo);
    raw = fit.fitted;
    pi = propensities(spec, n, &fit);
  } else {
    raw = *data.known_propensity;
    pi = propensities(spec, n, nullptr, &raw);
  }
  const double fraction = static_cast<double>(pi.clamped) / static_cast<double>(n);
  std::cout << "propensity range: [" << format_double(raw.minCoeff()) << ", " << format_double(raw.maxCoeff())
            << "]\n";
  std::cout << "clamped: " << pi.clamped << " of " << n << " (" << format_double(fraction) << ") at bound "
            << format_double(spec.clamp) << "\n";
  if (fraction > max_clamp_fraction) {
    std::cout << "WARNING: clamp fraction exceeds " << format_double(max_clamp_fraction)
              << "; common support is doubtful\n";
    return kExitDiagnostic;
  }
  std::cout << "overlap OK\n";
  return 0;
}

int cmd_simulate(const std::string& grid_path, const std::string& out_path, std::string checkpoint,
                 unsigned threads, int max_cells) {
  ExperimentConfig cfg = read_grid_file(grid_path);
  cfg.threads = threads;
  if (checkpoint.empty()) checkpoint = out_path + ".checkpoint.jsonl";
  const auto completed = read_checkpoint(checkpoint, cfg);
  if (!completed.empty()) std::cerr << "resuming: " << completed.size() << " cell(s) already in checkpoint\n";

  // --max-cells stops early with only the checkpoint written.
  struct Stop {};
  int computed = 0;
  try {
    const SimReport report = run_experiment(cfg, completed, [&](const CellResult& c) {
      append_checkpoint(checkpoint, c, cfg);
      std::cerr << "cell dgp=" << c.cell.dgp << " n=" << c.cell.n << " q=" << c.cell.q
                << " a=" << format_double(c.cell.a) << " hc=" << format_double(c.cell.hc) << ": rate="
                << format_double(c.rejection_rate.front()) << "\n";
      if (max_cells > 0 && ++computed >= max_cells) throw Stop{};
    });
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw InputError("cannot write table '" + out_path + "'");
    write_table_csv(out, report);
  } catch (const Stop&) {
    std::cerr << "stopped after " << computed << " cell(s); rerun to resume from " << checkpoint << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Specification test for heterogeneity of conditional average treatment effects"};
  app.require_subcommand(1);

  DataArgs test_args;
  double hc = 1.0;
  int reps = 500;
  std::uint64_t seed = 20240101;
  std::vector<double> levels{0.01, 0.05, 0.10};
  unsigned threads = 0;
  std::string empty_x = "constant";
  std::string out_path;
  auto* test = app.add_subcommand("test", "run the test on a dataset");
  add_data_options(test, test_args);
  test->add_option("--hc", hc, "bandwidth multiplier h_c")->capture_default_str();
  test->add_option("--reps", reps, "bootstrap replicates")->capture_default_str()->check(CLI::PositiveNumber);
  test->add_option("--seed", seed, "master seed")->capture_default_str();
  test->add_option("--levels", levels, "significance levels")->delimiter(',')->capture_default_str();
  test->add_option("--threads", threads, "worker threads (0 = all cores); does not change results");
  test->add_option("--empty-x", empty_x, "null when X is empty: constant | zero")->capture_default_str();
  test->add_option("--out", out_path, "report path (default stdout)");

  std::string grid_path, table_path, checkpoint;
  unsigned sim_threads = 0;
  int max_cells = 0;
  auto* sim = app.add_subcommand("simulate", "run a Monte Carlo size/power grid");
  sim->add_option("--grid", grid_path, "grid configuration (TOML)")->required();
  sim->add_option("--out", table_path, "output CSV table")->required();
  sim->add_option("--checkpoint", checkpoint, "checkpoint file (default <out>.checkpoint.jsonl)");
  sim->add_option("--threads", sim_threads, "worker threads (0 = all cores); does not change results");
  sim->add_option("--max-cells", max_cells, "stop after computing this many new cells");

  DataArgs val_args;
  double max_clamp_fraction = 0.05;
  auto* validate = app.add_subcommand("validate", "check propensity overlap and missing values");
  add_data_options(validate, val_args);
  validate->add_option("--max-clamp-fraction", max_clamp_fraction, "fail when more propensities are clamped")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitInput;
  }

  try {
    if (*test) return cmd_test(test_args, hc, reps, seed, levels, threads, empty_x, out_path);
    if (*sim) return cmd_simulate(grid_path, table_path, checkpoint, sim_threads, max_cells);
    if (*validate) return cmd_validate(val_args, max_clamp_fraction);
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::invalid_argument& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumeric;
  }
  return 0;
}
