#include "htecheck/io.hpp"

#include <cstdio>
#include <filesystem>
#include <sstream>

#include <gtest/gtest.h>

namespace htecheck {
namespace {

CsvTable parse(const std::string& text) {
  std::istringstream in(text);
  return read_csv(in);
}

TEST(Csv, LoadsRolesAndDropsMissing) {
  const CsvTable t = parse(
      "id,y,d,age,cd40,z1\n"
      "1,10,1,30,400,0.5\n"
      "2,NA,0,35,380,0.1\n"
      "3,12,0,,390,0.2\n"
      "4,9,1,41,310,-0.3\n"
      "5,7,0,52,200,1\n");
  ColumnRoles roles{"y", "d", {"age", "cd40"}, {"z1"}, ""};
  const LoadedData l = load_dataset(t, roles);
  EXPECT_EQ(l.dropped_rows, 2);
  EXPECT_EQ(l.missing.at("y"), 1);
  EXPECT_EQ(l.missing.at("age"), 1);
  ASSERT_EQ(l.data.size(), 3);
  EXPECT_EQ(l.data.y, Eigen::Vector3d(10, 9, 7));
  EXPECT_EQ(l.data.d, Eigen::Vector3d(1, 1, 0));
  EXPECT_EQ(l.data.x(1, 1), 310.0);
  EXPECT_EQ(l.data.z(2, 0), 1.0);
}

TEST(Csv, Errors) {
  const CsvTable t = parse("y,d,x\n1,0,0.5\n2,2,0.1\n3,1,0.2\n");
  try {
    load_dataset(t, {"y", "d", {"x"}, {}, ""});
    FAIL() << "expected InputError";
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("'d'"), std::string::npos);
  }
  EXPECT_THROW(load_dataset(t, {"y", "treat", {"x"}, {}, ""}), InputError);
  EXPECT_THROW(load_dataset(t, {"y", "d", {"x"}, {"x"}, ""}), InputError);
  EXPECT_THROW(load_dataset(parse("y,d,x\n1,0,abc\n2,1,0\n"), {"y", "d", {"x"}, {}, ""}), InputError);
  EXPECT_THROW(parse("y,d,x\n1,0\n"), InputError);
  EXPECT_THROW(parse(""), InputError);
}

TEST(Grid, ParsesCartesianProduct) {
  const ExperimentConfig cfg = parse_grid(R"(
seed = 42
mc_runs = 100
bootstrap_reps = 250
levels = [0.05, 0.1]

[[cell]]
dgp = 1
n = [100, 200]
q = 3
a = [0.0, 1.0]

[[cell]]
dgp = 4
n = 200
q = 7
a = 0.4
hc = [0.6, 1.6]
)");
  EXPECT_EQ(cfg.seed, 42u);
  EXPECT_EQ(cfg.mc_runs, 100);
  EXPECT_EQ(cfg.bootstrap_reps, 250);
  EXPECT_EQ(cfg.levels, (std::vector<double>{0.05, 0.1}));
  EXPECT_FALSE(cfg.intercept);
  ASSERT_EQ(cfg.cells.size(), 6u);
  EXPECT_EQ(cfg.cells[0], (GridCell{1, 100, 3, 0.0, 1.0}));
  EXPECT_EQ(cfg.cells[3], (GridCell{1, 200, 3, 1.0, 1.0}));
  EXPECT_EQ(cfg.cells[5], (GridCell{4, 200, 7, 0.4, 1.6}));
}

TEST(Grid, Errors) {
  EXPECT_THROW(parse_grid("seed = 1\n"), std::invalid_argument);
  EXPECT_THROW(parse_grid("[[cell]]\ndgp = 9\n"), std::invalid_argument);
  EXPECT_THROW(parse_grid("[[cell]]\nn = 'many'\n"), InputError);
  EXPECT_THROW(parse_grid("this is not toml"), InputError);
}

TEST(Checkpoint, RoundTripAndMismatchIgnored) {
  const auto path = (std::filesystem::temp_directory_path() / "htecheck_io_test.jsonl").string();
  std::filesystem::remove(path);
  ExperimentConfig cfg;
  cfg.cells = {{1, 100, 3, 0.2, 1.0}};
  cfg.levels = {0.05, 0.1};
  cfg.seed = 3;
  CellResult c{cfg.cells[0], cfg.levels, {0.59, 0.7}, cfg.mc_runs, cfg.bootstrap_reps, true};
  append_checkpoint(path, c, cfg);
  {
    std::ofstream out(path, std::ios::app);
    out << "{\"truncated\": ";  // partial line from an interrupted write
  }
  const auto loaded = read_checkpoint(path, cfg);
  ASSERT_EQ(loaded.size(), 1u);
  EXPECT_EQ(loaded.at(cfg.cells[0]).rejection_rate, c.rejection_rate);

  ExperimentConfig other = cfg;
  other.seed = 4;
  EXPECT_TRUE(read_checkpoint(path, other).empty());
  other = cfg;
  other.mc_runs = 10;
  EXPECT_TRUE(read_checkpoint(path, other).empty());
  std::filesystem::remove(path);
}

TEST(Table, CsvLayout) {
  SimReport r;
  r.cells.push_back({{2, 200, 3, 0.4, 1.0}, {0.05, 0.1}, {0.806, 0.9}, 1000, 500, true});
  std::ostringstream out;
  write_table_csv(out, r);
  EXPECT_EQ(out.str(),
            "dgp,n,q,a,h_c,level,rejection_rate,mc_runs\n"
            "2,200,3,0.4,1,0.05,0.806,1000\n"
            "2,200,3,0.4,1,0.1,0.9,1000\n");
}

TEST(Report, JsonCarriesConfigurationAndDiagnostics) {
  TestReport r;
  r.t_n = 0.125;
  r.p_value = 0.25;
  r.n = 10;
  r.seed = 77;
  r.reps = 3;
  r.bootstrap = {0.1, 0.2, 0.3};
  r.critical_values = {{0.05, 0.3}};
  r.propensity = "known:0.500000";
  r.degenerate = 2;
  const auto j = report_to_json(r);
  EXPECT_EQ(j["statistic"], 0.125);
  EXPECT_EQ(j["config"]["seed"], 77);
  EXPECT_EQ(j["config"]["propensity"], "known:0.500000");
  EXPECT_EQ(j["diagnostics"]["degenerate_neighborhoods"], 2);
  EXPECT_EQ(j["critical_values"][0]["value"], 0.3);
  EXPECT_EQ(j["bootstrap_statistics"].size(), 3u);
}

TEST(FormatDouble, ShortestRoundTrip) {
  EXPECT_EQ(format_double(0.2), "0.2");
  EXPECT_EQ(format_double(1.0), "1");
  EXPECT_EQ(format_double(0.046), "0.046");
}

}  // namespace
}  // namespace htecheck
