#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "experiments.hpp"

using namespace fraclab;
using namespace fraclab::cli;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("fraclab_cli_test_" + name);
  fs::remove_all(p);
  return p;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(FRACLAB_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

}  // namespace

TEST(Config, ParsesAndFillsDefaults) {
  const auto cfg = parse_config(json::parse(R"({"schema_version": 1, "geometry": {"n": 3, "s": 0.3},
                                                "quadrature": {"rel_tol": 1e-8}, "seed": 7,
                                                "params": {"points": 3}})"));
  EXPECT_EQ(cfg.geometry.n, 3);
  EXPECT_DOUBLE_EQ(cfg.geometry.s, 0.3);
  EXPECT_DOUBLE_EQ(cfg.geometry.rho, 1.0);
  EXPECT_DOUBLE_EQ(cfg.quadrature.rel_tol, 1e-8);
  EXPECT_EQ(cfg.seed, 7u);
  EXPECT_EQ(cfg.params["points"], 3);
  EXPECT_NO_THROW(validate_config(cfg));
}

TEST(Config, RejectsUnknownKeysAndBadTypes) {
  EXPECT_THROW(parse_config(json::parse(R"({"geomtry": {}})")), ConfigurationError);
  EXPECT_THROW(parse_config(json::parse(R"({"geometry": {"n": 2, "dim": 2}})")), ConfigurationError);
  EXPECT_THROW(parse_config(json::parse(R"({"quadrature": {"tol": 1}})")), ConfigurationError);
  EXPECT_THROW(parse_config(json::parse(R"({"geometry": {"n": 2.5}})")), ConfigurationError);
  EXPECT_THROW(parse_config(json::parse(R"({"geometry": {"s": "half"}})")), ConfigurationError);
  EXPECT_THROW(parse_config(json::parse(R"({"schema_version": 2})")), ConfigurationError);
  EXPECT_THROW(parse_config(json::parse(R"({"seed": -1})")), ConfigurationError);
  EXPECT_THROW(parse_config(json::parse(R"([1, 2])")), ConfigurationError);
}

TEST(Config, RangesValidatedBeforeAnyWork) {
  ExperimentConfig cfg;
  cfg.geometry.s = 1.2;
  EXPECT_THROW(run_experiment("sphere-inequality", cfg), ConfigurationError);
  cfg = {};
  cfg.geometry.rho = -1.0;
  EXPECT_THROW(run_experiment("f-sigma", cfg), ConfigurationError);
  cfg = {};
  cfg.params = {{"no_such_parameter", 1}};
  EXPECT_THROW(run_experiment("green-expansion", cfg), ConfigurationError);
  cfg.params = {{"deltas", {0.01, 0.02}}};
  EXPECT_THROW(run_experiment("green-expansion", cfg), ConfigurationError);
  cfg.params = {{"points", 2.5}};
  EXPECT_THROW(run_experiment("green-expansion", cfg), ConfigurationError);
  cfg.params = {{"field", "banana"}};
  EXPECT_THROW(run_experiment("hopf-verify", cfg), ConfigurationError);
  EXPECT_THROW(run_experiment("no-such-experiment", ExperimentConfig{}), ConfigurationError);
}

TEST(Report, EnvelopeIsCompleteAndDeterministic) {
  ExperimentConfig cfg;
  const Outcome a = run_experiment("sphere-inequality", cfg);
  const Outcome b = run_experiment("sphere-inequality", cfg);
  EXPECT_TRUE(a.passed);
  for (const char* key : {"schema_version", "tool_version", "subcommand", "statement", "config", "results", "checks",
                          "passed", "notes", "wall_time_s"})
    EXPECT_TRUE(a.report.contains(key)) << key;
  EXPECT_EQ(a.report["schema_version"], kSchemaVersion);
  json ja = a.report, jb = b.report;
  ja.erase("wall_time_s");
  jb.erase("wall_time_s");
  EXPECT_EQ(ja.dump(2), jb.dump(2));
  // keys come out sorted
  std::string prev;
  for (const auto& item : a.report.items()) {
    EXPECT_LT(prev, item.key());
    prev = item.key();
  }
  for (const auto& [name, content] : a.files.files()) {
    if (name != "sphere_inequality_report.json") {
      EXPECT_EQ(content, b.files.files().at(name)) << name;
    }
  }
}

TEST(Report, NotApplicableGeometryPassesWithNote) {
  ExperimentConfig cfg;
  cfg.geometry = {1, 0.5, 1.0};
  const Outcome o = run_experiment("f-sigma", cfg);
  EXPECT_TRUE(o.passed);
  EXPECT_FALSE(o.report["applicable"].get<bool>());
  EXPECT_FALSE(o.report["notes"].empty());
}

TEST(Cli, GreenExpansionEmitsMonotoneSweep) {
  const fs::path out = scratch("green");
  ASSERT_EQ(run_cli("green-expansion --n 2 --s 0.5 --out " + out.string()), 0);
  std::ifstream in(out / "expansion_sweep.csv");
  ASSERT_TRUE(in);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "z_index,delta,green,a0,ratio,deviation");
  std::map<int, std::vector<std::pair<double, double>>> by_z;
  while (std::getline(in, line)) {
    const auto cells = split_csv_line(line);
    ASSERT_EQ(cells.size(), 6u);
    by_z[std::stoi(cells[0])].emplace_back(std::stod(cells[1]), std::stod(cells[4]));
  }
  EXPECT_EQ(by_z.size(), 5u);
  for (const auto& [z, rows] : by_z) {
    ASSERT_GE(rows.size(), 3u);
    int ups = 0, downs = 0;
    for (std::size_t i = 1; i < rows.size(); ++i) {
      EXPECT_LT(rows[i].first, rows[i - 1].first);
      if (rows[i].second > rows[i - 1].second) ++ups;
      if (rows[i].second < rows[i - 1].second) ++downs;
    }
    EXPECT_TRUE(ups == 0 || downs == 0) << "z " << z;
  }
  const json report = json::parse(slurp(out / "green_expansion_report.json"));
  EXPECT_TRUE(report["passed"].get<bool>());
  fs::remove_all(out);
}

TEST(Cli, ExitCodesAndNoPartialOutputs) {
  const fs::path dir = scratch("bad");
  fs::create_directories(dir);
  const fs::path out = dir / "out";
  std::ofstream(dir / "broken.json") << R"({"geometry": {"n": 2,)";
  std::ofstream(dir / "unknown.json") << R"({"geometry": {"n": 2}, "extra": true})";
  std::ofstream(dir / "range.json") << R"({"geometry": {"n": 2, "s": 1.5}})";
  std::ofstream(dir / "param.json") << R"({"params": {"epsilon": 0.45}})";
  EXPECT_EQ(run_cli("torsion-calibrate --config " + (dir / "broken.json").string() + " --out " + out.string()), 2);
  EXPECT_EQ(run_cli("torsion-calibrate --config " + (dir / "unknown.json").string() + " --out " + out.string()), 2);
  EXPECT_EQ(run_cli("sphere-inequality --config " + (dir / "range.json").string() + " --out " + out.string()), 2);
  EXPECT_EQ(run_cli("counterexample --config " + (dir / "param.json").string() + " --out " + out.string()), 2);
  EXPECT_EQ(run_cli("f-sigma --n 7 --out " + out.string()), 2);
  EXPECT_EQ(run_cli("f-sigma --bogus --out " + out.string()), 2);
  EXPECT_EQ(run_cli("--out " + out.string()), 2);
  EXPECT_FALSE(fs::exists(out));

  // a failing check exits 1 and still writes its report
  std::ofstream(dir / "strict.json") << R"({"params": {"tol": 1e-300}})";
  EXPECT_EQ(run_cli("sphere-inequality --config " + (dir / "strict.json").string() + " --out " + out.string()), 1);
  const json report = json::parse(slurp(out / "sphere_inequality_report.json"));
  EXPECT_FALSE(report["passed"].get<bool>());
  EXPECT_FALSE(report["failed_checks"].empty());

  EXPECT_EQ(run_cli("sphere-inequality --out " + out.string()), 0);
  fs::remove_all(dir);
}
