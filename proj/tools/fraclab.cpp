#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "experiments.hpp"

using namespace fraclab;
using namespace fraclab::cli;

namespace {

struct Overrides {
  std::string config_path;
  std::string out = "fraclab_out";
  std::optional<int> n;
  std::optional<double> s;
  std::optional<double> rho;
  std::optional<double> tol;
  bool json_stdout = false;
};

ExperimentConfig load(const Overrides& o) {
  json doc = json::object();
  if (!o.config_path.empty()) {
    std::ifstream in(o.config_path);
    if (!in) throw ConfigurationError("cannot read config file " + o.config_path);
    try {
      doc = json::parse(in);
    } catch (const json::parse_error& e) {
      throw ConfigurationError(std::string("config is not valid JSON: ") + e.what());
    }
  }
  ExperimentConfig cfg = parse_config(doc);
  if (o.n) cfg.geometry.n = *o.n;
  if (o.s) cfg.geometry.s = *o.s;
  if (o.rho) cfg.geometry.rho = *o.rho;
  if (o.tol) cfg.quadrature.rel_tol = *o.tol;
  return cfg;
}

int finish(const Outcome& out, const Overrides& o) {
  out.files.write(o.out);
  if (o.json_stdout) {
    std::cout << out.report.dump(2) << "\n";
  } else {
    const std::string sub = out.report.value("subcommand", std::string());
    std::cout << sub << ": " << (out.error ? "ERROR" : out.passed ? "PASS" : "FAIL") << "  (" << o.out << ")\n";
    if (out.report.contains("failed_checks"))
      for (const auto& c : out.report["failed_checks"]) std::cout << "  failed: " << c.get<std::string>() << "\n";
    if (out.report.contains("experiments"))
      for (const auto& e : out.report["experiments"])
        std::cout << "  " << (e["error"].get<bool>() ? "ERROR" : e["passed"].get<bool>() ? "pass " : "FAIL ") << " "
                  << e["dir"].get<std::string>() << "\n";
    if (out.report.contains("error")) std::cerr << "error: " << out.report["error"].get<std::string>() << "\n";
  }
  if (out.error) return 2;
  return out.passed ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Numerical experiments for the fractional Laplacian on balls"};
  app.require_subcommand(1);
  Overrides o;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config_path, "JSON config file")->check(CLI::ExistingFile);
    sub->add_option("--out", o.out, "output directory")->capture_default_str();
    sub->add_option("--n", o.n, "dimension (1, 2 or 3)");
    sub->add_option("--s", o.s, "fractional order in (0, 1)");
    sub->add_option("--rho", o.rho, "ball radius");
    sub->add_option("--tol", o.tol, "relative quadrature tolerance");
    sub->add_flag("--json", o.json_stdout, "print the report JSON to stdout");
  };
  std::string chosen;
  for (const auto& ex : experiments()) {
    auto* sub = app.add_subcommand(ex.name, ex.statement);
    add_common(sub);
    sub->callback([&chosen, name = ex.name] { chosen = name; });
  }
  auto* suite = app.add_subcommand("suite", "run every experiment with default parameters on several geometries");
  add_common(suite);
  suite->callback([&chosen] { chosen = "suite"; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  Outcome out;
  try {
    const ExperimentConfig cfg = load(o);
    out = chosen == "suite" ? run_suite(cfg) : run_experiment(chosen, cfg);
  } catch (const ConfigurationError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const UnsupportedError& e) {
    std::cerr << "unsupported: " << e.what() << "\n";
    return 2;
  } catch (const DomainError& e) {
    std::cerr << "domain error: " << e.what() << "\n";
    return 2;
  }
  try {
    return finish(out, o);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
