#pragma once

// File formats: CSV datasets, JSON test reports, TOML experiment grids,
// JSON-lines checkpoints and the CSV rejection-rate table.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>
#include <toml.hpp>

#include "htecheck/dataset.hpp"
#include "htecheck/hte_test.hpp"
#include "htecheck/simulate.hpp"

namespace htecheck {

/// Malformed or inconsistent input files and column specifications.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Shortest round-trip decimal representation.
inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw InputError("column '" + name + "' not found in input header");
    return static_cast<std::size_t>(it - header.begin());
  }
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\"");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\"");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split_fields(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, sep)) out.push_back(trim(field));
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

inline bool is_missing(const std::string& s) {
  return s.empty() || s == "NA" || s == "NaN" || s == "nan" || s == "." || s == "null";
}

inline double parse_number(const std::string& s, const std::string& column, std::size_t row) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw InputError("column '" + column + "' row " + std::to_string(row + 1) + ": cannot parse '" + s +
                     "' as a number");
  return v;
}

}  // namespace detail

inline CsvTable read_csv(std::istream& in, char sep = ',') {
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) throw InputError("input is empty");
  t.header = detail::split_fields(line, sep);
  while (std::getline(in, line)) {
    if (detail::trim(line).empty()) continue;
    auto fields = detail::split_fields(line, sep);
    if (fields.size() != t.header.size())
      throw InputError("row " + std::to_string(t.rows.size() + 1) + " has " + std::to_string(fields.size()) +
                       " fields, header has " + std::to_string(t.header.size()));
    t.rows.push_back(std::move(fields));
  }
  return t;
}

inline CsvTable read_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open input file '" + path + "'");
  return read_csv(in);
}

struct ColumnRoles {
  std::string outcome;
  std::string treatment;
  std::vector<std::string> x;
  std::vector<std::string> z;
  std::string propensity;  // optional known-propensity column

  void validate() const {
    if (outcome.empty()) throw InputError("outcome column not specified");
    if (treatment.empty()) throw InputError("treatment column not specified");
    if (x.empty() && z.empty()) throw InputError("no covariate columns specified");
    for (const auto& c : x)
      if (std::find(z.begin(), z.end(), c) != z.end())
        throw InputError("column '" + c + "' is listed in both X and Z");
  }
};

struct LoadedData {
  Dataset data;
  int dropped_rows = 0;
  std::map<std::string, int> missing;  // per required column
};

/// Builds a Dataset from named columns. Rows with a missing required value
/// are dropped and counted; the treatment must be coded 0/1.
inline LoadedData load_dataset(const CsvTable& t, const ColumnRoles& roles) {
  roles.validate();
  std::vector<std::string> names{roles.outcome, roles.treatment};
  names.insert(names.end(), roles.x.begin(), roles.x.end());
  names.insert(names.end(), roles.z.begin(), roles.z.end());
  if (!roles.propensity.empty()) names.push_back(roles.propensity);
  std::vector<std::size_t> idx;
  for (const auto& name : names) idx.push_back(t.column(name));

  LoadedData out;
  std::vector<std::size_t> keep;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    bool complete = true;
    for (std::size_t k = 0; k < idx.size(); ++k) {
      if (detail::is_missing(t.rows[r][idx[k]])) {
        ++out.missing[names[k]];
        complete = false;
      }
    }
    if (complete) keep.push_back(r);
    else ++out.dropped_rows;
  }

  const auto n = static_cast<Eigen::Index>(keep.size());
  const auto p = static_cast<Eigen::Index>(roles.x.size());
  const auto q = static_cast<Eigen::Index>(roles.z.size());
  Dataset& d = out.data;
  d.y.resize(n);
  d.d.resize(n);
  d.x.resize(n, p);
  d.z.resize(n, q);
  if (!roles.propensity.empty()) d.known_propensity = Eigen::VectorXd(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = t.rows[keep[static_cast<std::size_t>(i)]];
    const auto r = keep[static_cast<std::size_t>(i)];
    std::size_t k = 0;
    d.y[i] = detail::parse_number(row[idx[k]], names[k], r);
    ++k;
    const double treat = detail::parse_number(row[idx[k]], names[k], r);
    if (treat != 0.0 && treat != 1.0)
      throw InputError("treatment column '" + roles.treatment + "' row " + std::to_string(r + 1) +
                       " has value " + row[idx[k]] + "; expected 0 or 1");
    d.d[i] = treat;
    ++k;
    for (Eigen::Index c = 0; c < p; ++c, ++k) d.x(i, c) = detail::parse_number(row[idx[k]], names[k], r);
    for (Eigen::Index c = 0; c < q; ++c, ++k) d.z(i, c) = detail::parse_number(row[idx[k]], names[k], r);
    if (d.known_propensity) (*d.known_propensity)[i] = detail::parse_number(row[idx[k]], names[k], r);
  }
  if (n < 2) throw InputError("fewer than two complete rows after dropping missing values");
  return out;
}

inline nlohmann::ordered_json report_to_json(const TestReport& r) {
  nlohmann::ordered_json j;
  j["statistic"] = r.t_n;
  j["p_value"] = r.p_value;
  j["n"] = r.n;
  nlohmann::ordered_json crit = nlohmann::ordered_json::array();
  for (const auto& [level, value] : r.critical_values) crit.push_back({{"level", level}, {"value", value}});
  j["critical_values"] = crit;
  j["config"] = {{"seed", r.seed},
                 {"bootstrap_reps", r.reps},
                 {"bandwidth", r.bandwidth},
                 {"bandwidth_multiplier", r.bandwidth_multiplier},
                 {"kernel", r.kernel},
                 {"propensity", r.propensity},
                 {"clamp", r.clamp},
                 {"normal_method", kNormalMethod}};
  j["diagnostics"] = {{"clamped_propensities", r.clamped},
                      {"degenerate_neighborhoods", r.degenerate},
                      {"propensity_min", r.propensity_min},
                      {"propensity_max", r.propensity_max}};
  j["bootstrap_statistics"] = r.bootstrap;
  return j;
}

// ---------------------------------------------------------------------------
// Experiment grids

namespace detail {

template <class T>
std::vector<T> toml_list(const toml::table& t, std::string_view key, std::vector<T> fallback) {
  const toml::node* node = t.get(key);
  if (node == nullptr) return fallback;
  std::vector<T> out;
  auto take = [&](const toml::node& v) {
    if constexpr (std::is_floating_point_v<T>) {
      if (auto f = v.value<double>()) out.push_back(*f);
      else throw InputError("grid key '" + std::string(key) + "' must be numeric");
    } else {
      if (auto i = v.value<std::int64_t>()) out.push_back(static_cast<T>(*i));
      else throw InputError("grid key '" + std::string(key) + "' must be an integer");
    }
  };
  if (const auto* arr = node->as_array()) {
    for (const auto& v : *arr) take(v);
  } else {
    take(*node);
  }
  if (out.empty()) throw InputError("grid key '" + std::string(key) + "' is an empty list");
  return out;
}

}  // namespace detail

/// Parses an experiment grid. Top-level keys: seed, mc_runs, bootstrap_reps,
/// levels, intercept, clamp. Each [[cell]] table takes dgp, n, q, a, hc as a
/// scalar or list; lists expand to their Cartesian product.
inline ExperimentConfig parse_grid(std::string_view text) {
  toml::table t;
  try {
    t = toml::parse(text);
  } catch (const toml::parse_error& e) {
    throw InputError(std::string("grid file: ") + std::string(e.description()));
  }
  ExperimentConfig cfg;
  cfg.seed = static_cast<std::uint64_t>(t["seed"].value_or<std::int64_t>(1));
  cfg.mc_runs = static_cast<int>(t["mc_runs"].value_or<std::int64_t>(1000));
  cfg.bootstrap_reps = static_cast<int>(t["bootstrap_reps"].value_or<std::int64_t>(500));
  cfg.levels = detail::toml_list<double>(t, "levels", {0.05});
  cfg.intercept = t["intercept"].value_or(false);
  cfg.clamp = t["clamp"].value_or(0.01);
  if (const auto* cells = t["cell"].as_array()) {
    for (const auto& node : *cells) {
      const auto* ct = node.as_table();
      if (ct == nullptr) throw InputError("grid 'cell' entries must be tables");
      for (int dgp : detail::toml_list<int>(*ct, "dgp", {1}))
        for (auto n : detail::toml_list<Eigen::Index>(*ct, "n", {200}))
          for (auto q : detail::toml_list<Eigen::Index>(*ct, "q", {3}))
            for (double a : detail::toml_list<double>(*ct, "a", {0.0}))
              for (double hc : detail::toml_list<double>(*ct, "hc", {1.0})) cfg.cells.push_back({dgp, n, q, a, hc});
    }
  }
  cfg.validate();
  return cfg;
}

inline ExperimentConfig read_grid_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open grid file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_grid(ss.str());
}

inline nlohmann::ordered_json cell_to_json(const CellResult& c, const ExperimentConfig& cfg) {
  return {{"seed", cfg.seed},         {"mc_runs", c.mc_runs},         {"bootstrap_reps", c.bootstrap_reps},
          {"intercept", cfg.intercept}, {"clamp", cfg.clamp},          {"dgp", c.cell.dgp},
          {"n", c.cell.n},            {"q", c.cell.q},                {"a", c.cell.a},
          {"hc", c.cell.hc},          {"levels", c.levels},           {"rejection_rate", c.rejection_rate},
          {"response", c.binary ? "binary" : "continuous"}};
}

/// Completed cells from a JSON-lines checkpoint that match `cfg`'s seed, run
/// counts and levels. Unreadable trailing lines (an interrupted write) are
/// ignored.
inline std::map<GridCell, CellResult> read_checkpoint(const std::string& path, const ExperimentConfig& cfg) {
  std::map<GridCell, CellResult> out;
  std::ifstream in(path);
  if (!in) return out;
  std::string line;
  while (std::getline(in, line)) {
    const auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) continue;
    try {
      if (j.at("seed").get<std::uint64_t>() != cfg.seed || j.at("mc_runs").get<int>() != cfg.mc_runs ||
          j.at("bootstrap_reps").get<int>() != cfg.bootstrap_reps ||
          j.at("levels").get<std::vector<double>>() != cfg.levels ||
          j.at("intercept").get<bool>() != cfg.intercept || j.at("clamp").get<double>() != cfg.clamp)
        continue;
      CellResult c;
      c.cell = {j.at("dgp").get<int>(), j.at("n").get<Eigen::Index>(), j.at("q").get<Eigen::Index>(),
                j.at("a").get<double>(), j.at("hc").get<double>()};
      c.levels = cfg.levels;
      c.rejection_rate = j.at("rejection_rate").get<std::vector<double>>();
      c.mc_runs = cfg.mc_runs;
      c.bootstrap_reps = cfg.bootstrap_reps;
      c.binary = binary_response(c.cell.dgp);
      if (c.rejection_rate.size() == c.levels.size()) out[c.cell] = c;
    } catch (const nlohmann::json::exception&) {
      continue;
    }
  }
  return out;
}

inline void append_checkpoint(const std::string& path, const CellResult& c, const ExperimentConfig& cfg) {
  std::ofstream out(path, std::ios::app);
  if (!out) throw InputError("cannot write checkpoint file '" + path + "'");
  out << cell_to_json(c, cfg).dump() << '\n';
}

/// Columns: dgp,n,q,a,h_c,level,rejection_rate,mc_runs.
inline void write_table_csv(std::ostream& out, const SimReport& report) {
  out << "dgp,n,q,a,h_c,level,rejection_rate,mc_runs\n";
  for (const CellResult& c : report.cells) {
    for (std::size_t k = 0; k < c.levels.size(); ++k) {
      out << c.cell.dgp << ',' << c.cell.n << ',' << c.cell.q << ',' << format_double(c.cell.a) << ','
          << format_double(c.cell.hc) << ',' << format_double(c.levels[k]) << ','
          << format_double(c.rejection_rate[k]) << ',' << c.mc_runs << '\n';
    }
  }
}

}  // namespace htecheck
