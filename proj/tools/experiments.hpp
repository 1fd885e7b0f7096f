#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "fraclab/fraclab.hpp"

namespace fraclab::cli {

struct ExperimentConfig {
  ProblemGeometry geometry{2, 0.5, 1.0};
  QuadratureSpec quadrature{};
  std::uint64_t seed = 1;
  json params = json::object();
};

inline void require(bool ok, const std::string& msg) {
  if (!ok) throw ConfigurationError(msg);
}

namespace detail {

inline void reject_unknown(const json& obj, const std::vector<std::string>& allowed, const std::string& where) {
  require(obj.is_object(), where + " must be a JSON object");
  for (const auto& item : obj.items())
    if (std::find(allowed.begin(), allowed.end(), item.key()) == allowed.end())
      throw ConfigurationError("unknown key '" + item.key() + "' in " + where);
}

inline double number(const json& obj, const std::string& key, double fallback, const std::string& where) {
  if (!obj.contains(key)) return fallback;
  require(obj[key].is_number(), where + "." + key + " must be a number");
  return obj[key].get<double>();
}

inline long long integer(const json& obj, const std::string& key, long long fallback, const std::string& where) {
  if (!obj.contains(key)) return fallback;
  require(obj[key].is_number_integer(), where + "." + key + " must be an integer");
  return obj[key].get<long long>();
}

}  // namespace detail

/// Parses a config document; every level rejects keys it does not know.
inline ExperimentConfig parse_config(const json& doc) {
  using namespace detail;
  reject_unknown(doc, {"schema_version", "geometry", "quadrature", "seed", "params"}, "config");
  ExperimentConfig cfg;
  if (doc.contains("schema_version"))
    require(integer(doc, "schema_version", 0, "config") == kSchemaVersion,
            "config.schema_version must be " + std::to_string(kSchemaVersion));
  if (doc.contains("geometry")) {
    const json& g = doc["geometry"];
    reject_unknown(g, {"n", "s", "rho"}, "geometry");
    cfg.geometry.n = static_cast<int>(integer(g, "n", cfg.geometry.n, "geometry"));
    cfg.geometry.s = number(g, "s", cfg.geometry.s, "geometry");
    cfg.geometry.rho = number(g, "rho", cfg.geometry.rho, "geometry");
  }
  if (doc.contains("quadrature")) {
    const json& q = doc["quadrature"];
    reject_unknown(q, {"abs_tol", "rel_tol", "max_subdivisions", "sphere_degree"}, "quadrature");
    cfg.quadrature.abs_tol = number(q, "abs_tol", cfg.quadrature.abs_tol, "quadrature");
    cfg.quadrature.rel_tol = number(q, "rel_tol", cfg.quadrature.rel_tol, "quadrature");
    cfg.quadrature.max_subdivisions = static_cast<int>(integer(q, "max_subdivisions", cfg.quadrature.max_subdivisions, "quadrature"));
    cfg.quadrature.sphere_degree = static_cast<int>(integer(q, "sphere_degree", cfg.quadrature.sphere_degree, "quadrature"));
  }
  if (doc.contains("seed")) {
    const long long seed = integer(doc, "seed", 1, "config");
    require(seed >= 0, "config.seed must be nonnegative");
    cfg.seed = static_cast<std::uint64_t>(seed);
  }
  if (doc.contains("params")) {
    require(doc["params"].is_object(), "config.params must be a JSON object");
    cfg.params = doc["params"];
  }
  return cfg;
}

/// Geometry and quadrature checks, reported as configuration errors.
inline void validate_config(const ExperimentConfig& cfg) {
  try {
    cfg.geometry.validate();
  } catch (const std::exception& e) {
    throw ConfigurationError(std::string("geometry: ") + e.what());
  }
  cfg.quadrature.validate();
  require(cfg.quadrature.rel_tol < 1e-2, "quadrature.rel_tol must be below 1e-2");
}

/// Experiment parameters: defaults overridden by the config, with the kind of
/// each value fixed by its default.
class Params {
 public:
  Params(const json& given, json defaults, const std::string& owner) : values_(std::move(defaults)) {
    require(given.is_object(), "params must be a JSON object");
    for (const auto& item : given.items()) {
      if (!values_.contains(item.key())) throw ConfigurationError("unknown parameter '" + item.key() + "' for " + owner);
      require(same_kind(values_[item.key()], item.value()), "parameter '" + item.key() + "' has the wrong type");
      values_[item.key()] = item.value();
    }
  }

  double num(const std::string& k) const { return values_.at(k).get<double>(); }
  int integer(const std::string& k) const { return values_.at(k).get<int>(); }
  bool flag(const std::string& k) const { return values_.at(k).get<bool>(); }
  std::string str(const std::string& k) const { return values_.at(k).get<std::string>(); }
  std::vector<double> list(const std::string& k) const { return values_.at(k).get<std::vector<double>>(); }
  const json& raw(const std::string& k) const { return values_.at(k); }
  const json& echo() const { return values_; }

 private:
  static bool same_kind(const json& def, const json& v) {
    if (def.is_number_integer()) return v.is_number_integer();
    if (def.is_number()) return v.is_number();
    if (def.is_boolean()) return v.is_boolean();
    if (def.is_string()) return v.is_string();
    if (def.is_array()) {
      if (!v.is_array()) return false;
      const bool nested = !def.empty() && def.front().is_array();
      for (const auto& e : v)
        if (nested ? !e.is_array() : !e.is_number()) return false;
      return true;
    }
    return false;
  }

  json values_;
};

class Checks {
 public:
  void add(const std::string& name, bool ok, double value, double threshold, const std::string& relation) {
    j_[name] = {{"passed", ok}, {"value", value}, {"threshold", threshold}, {"relation", relation}};
    all_ = all_ && ok;
  }

  void add(const std::string& name, bool ok, const std::string& detail) {
    j_[name] = {{"passed", ok}, {"detail", detail}};
    all_ = all_ && ok;
  }

  bool passed() const { return all_; }
  const json& to_json() const { return j_; }
  std::vector<std::string> failed() const {
    std::vector<std::string> out;
    for (const auto& item : j_.items())
      if (!item.value()["passed"].get<bool>()) out.push_back(item.key());
    return out;
  }

 private:
  json j_ = json::object();
  bool all_ = true;
};

struct Run {
  json results = json::object();
  Checks checks;
  std::vector<std::string> notes;
  OutputSet files;
  bool applicable = true;
};

struct Experiment {
  std::string name;
  std::string statement;
  std::function<json(const ExperimentConfig&)> defaults;
  std::function<void(const ExperimentConfig&, const Params&)> validate;
  std::function<void(const ExperimentConfig&, const Params&, Run&)> run;
};

namespace detail {

inline std::vector<Vec3> points_in_ball(int n, double radius, std::size_t count, std::uint64_t seed) {
  return ball_samples(n, {0, 0, 0}, radius, count, seed);
}

inline double rel_err(double value, double exact) { return std::abs(value - exact) / std::abs(exact); }

inline json row_json(const Vec3& x, int n) { return to_json(x, n); }

inline void require_deltas(const std::vector<double>& d, const std::string& what) {
  for (std::size_t i = 0; i < d.size(); ++i) {
    require(d[i] > 0.0 && d[i] < 1.0, what + " entries must lie in (0, 1) (units of rho)");
    require(i == 0 || d[i] < d[i - 1], what + " must decrease strictly");
  }
}

// ---------------------------------------------------------------- torsion

inline void torsion_calibrate(const ExperimentConfig& cfg, const Params& p, Run& run) {
  const ProblemGeometry& g = cfg.geometry;
  const QuadratureSpec& q = cfg.quadrature;
  const BallGreen G(g, q);
  const SourceTerm one = SourceTerm::constant(1.0, g.rho);
  const auto pts = points_in_ball(g.n, p.num("max_radius") * g.rho, static_cast<std::size_t>(p.integer("points")), cfg.seed);
  const auto values = parallel_map<double>(pts.size(), [&](std::size_t i) { return solve_at(one, pts[i], G).value; });
  CsvTable table({"index", "x0", "x1", "x2", "r", "computed", "exact", "rel_error"});
  double worst = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double exact = torsion_value(pts[i], g);
    const double e = rel_err(values[i], exact);
    worst = std::max(worst, e);
    table.add({static_cast<long long>(i), pts[i][0], pts[i][1], pts[i][2], norm(pts[i]), values[i], exact, e});
  }
  run.files.add("torsion_points.csv", table.str());

  SolveOptions opt;
  opt.radii = chebyshev_radial_grid(g.rho, p.integer("grid_radii"));
  opt.sphere_degree = p.integer("grid_sphere_degree");
  const SampledField field = solve(one, g, q, opt);
  run.files.add_field("torsion_field", field);
  double field_err = 0.0, peak = torsion_value({0, 0, 0}, g);
  for (std::size_t i = 0; i < field.radii.size(); ++i)
    for (std::size_t k = 0; k < field.sphere.size(); ++k)
      field_err = std::max(field_err, std::abs(field.values[i][k] - torsion_value(field.radii[i] * field.sphere[k].point, g)));

  const double kappa = calibrate_kappa(g, q);
  const double kappa_ref = green_kappa(g.n, g.s);
  const double tol = p.num("tol");
  run.results = {{"torsion_constant", torsion_constant(g.n, g.s)},
                 {"max_rel_error", worst},
                 {"field_max_error_over_peak", field_err / peak},
                 {"field_anisotropy", field.max_anisotropy()},
                 {"kappa_calibrated", kappa},
                 {"kappa_closed_form", kappa_ref}};
  run.checks.add("pointwise_rel_error", worst <= tol, worst, tol, "<=");
  run.checks.add("field_error_over_peak", field_err / peak <= tol, field_err / peak, tol, "<=");
  run.checks.add("kappa_calibration", rel_err(kappa, kappa_ref) <= 1e-3, rel_err(kappa, kappa_ref), 1e-3, "<=");
}

// ---------------------------------------------------------------- green expansion

inline void green_expansion(const ExperimentConfig& cfg, const Params& p, Run& run) {
  const ProblemGeometry& g = cfg.geometry;
  const BallGreen G(g, cfg.quadrature);
  std::vector<double> deltas = p.list("deltas");
  if (deltas.empty()) deltas = default_deltas(1.0);
  for (double& d : deltas) d *= g.rho;
  const Vec3 e{1, 0, 0};
  const auto zs = points_in_ball(g.n, p.num("z_radius") * g.rho, static_cast<std::size_t>(p.integer("points")), cfg.seed);
  const double tol = p.num("ratio_tol"), decay = p.num("decay_factor");
  CsvTable table({"z_index", "delta", "green", "a0", "ratio", "deviation"});
  double worst_final = 0.0, worst_decay = std::numeric_limits<double>::infinity();
  bool monotone = true;
  json per_z = json::array();
  for (std::size_t j = 0; j < zs.size(); ++j) {
    const double a0 = a0_coefficient(zs[j], e, g).a0;
    std::vector<double> ratio;
    for (double d : deltas) {
      const double gv = G((g.rho - d) * e, zs[j]).value;
      ratio.push_back(gv / (a0 * std::pow(d, g.s)));
      table.add({static_cast<long long>(j), d, gv, a0, ratio.back(), std::abs(ratio.back() - 1.0)});
    }
    worst_final = std::max(worst_final, std::abs(ratio.back() - 1.0));
    int ups = 0, downs = 0;
    for (std::size_t i = 1; i < ratio.size(); ++i) {
      if (ratio[i] > ratio[i - 1]) ++ups;
      if (ratio[i] < ratio[i - 1]) ++downs;
      if (std::abs(deltas[i - 1] / deltas[i] - 2.0) < 1e-9)
        worst_decay = std::min(worst_decay, std::abs(ratio[i - 1] - 1.0) / std::abs(ratio[i] - 1.0));
    }
    monotone = monotone && (ups == 0 || downs == 0);
    per_z.push_back({{"z", row_json(zs[j], g.n)}, {"a0", a0}, {"ratio_at_smallest_delta", ratio.back()}});
  }
  run.files.add("expansion_sweep.csv", table.str());
  run.results = {{"deltas", deltas}, {"points", per_z}, {"max_deviation_at_smallest_delta", worst_final},
                 {"min_deviation_decay_per_halving", worst_decay}};
  run.checks.add("ratio_at_smallest_delta", worst_final <= tol, worst_final, tol, "<=");
  run.checks.add("deviation_decay_per_halving", worst_decay >= decay, worst_decay, decay, ">=");
  run.checks.add("ratio_monotone_in_delta", monotone, "ratio column monotone in delta for every z");
}

// ---------------------------------------------------------------- interior blow-up

inline void interior_blowup(const ExperimentConfig& cfg, const Params& p, Run& run) {
  const ProblemGeometry& g = cfg.geometry;
  if (!(g.n > 2.0 * g.s)) {
    run.applicable = false;
    run.notes.push_back("the blow-up limit is finite only for n > 2s; nothing to check for this geometry");
    return;
  }
  const BallGreen G(g, cfg.quadrature);
  const std::size_t count = static_cast<std::size_t>(p.integer("pairs"));
  const auto ys = points_in_ball(g.n, 1.0, count, cfg.seed);
  const auto dirs = points_in_ball(g.n, 1.0, 4 * count, cfg.seed + 1);
  std::vector<Vec3> es;
  for (const Vec3& d : dirs) {
    if (es.size() == count) break;
    if (norm(d) > 0.1) es.push_back(normalized(d));
  }
  std::vector<double> factors = p.list("rho0_factors");
  CsvTable table({"pair", "rho0", "scaled_green", "limit", "rel_error"});
  double worst = 0.0;
  bool monotone = true;
  json pairs = json::array();
  for (std::size_t j = 0; j < count; ++j) {
    Vec3 e = es[j], y = ys[j];
    if (distance(e, y) < 0.05) y = 0.5 * y;
    const double limit = interior_blowup_limit(e, y, g);
    double prev = std::numeric_limits<double>::infinity();
    double last = 0.0;
    for (double f : factors) {
      const double r0 = f * g.rho;
      const double v = std::pow(r0, g.n - 2.0 * g.s) * G(r0 * e, r0 * y).value;
      last = rel_err(v, limit);
      if (last > prev) monotone = false;
      prev = last;
      table.add({static_cast<long long>(j), r0, v, limit, last});
    }
    worst = std::max(worst, last);
    pairs.push_back({{"e", row_json(e, g.n)}, {"y", row_json(y, g.n)}, {"limit", limit}, {"rel_error_at_smallest_rho0", last}});
  }
  run.files.add("blowup_table.csv", table.str());
  const double tol = p.num("tol");
  run.results = {{"pairs", pairs}, {"rho0_factors", factors}, {"max_rel_error_at_smallest_rho0", worst}};
  run.checks.add("limit_at_smallest_rho0", worst <= tol, worst, tol, "<=");
  run.checks.add("monotone_approach", monotone, "relative error decreases along the rho0 schedule for every pair");
}

// ---------------------------------------------------------------- barrier

inline void barrier_check(const ExperimentConfig& cfg, const Params& p, Run& run) {
  const int n = cfg.geometry.n;
  const double s = cfg.geometry.s;
  const QuadratureSpec& q = cfg.quadrature;
  const std::size_t count = static_cast<std::size_t>(p.integer("points"));
  std::vector<Vec3> annulus;
  for (const Vec3& x : points_in_ball(n, 1.0, 16 * count, cfg.seed)) {
    const double r = norm(x);
    if (r > 0.5 && r < 1.0) annulus.push_back(x);
    if (annulus.size() == count) break;
  }
  const auto interior = points_in_ball(n, p.num("torsion_radius"), static_cast<std::size_t>(p.integer("torsion_points")), cfg.seed + 1);
  const double Lambda = p.num("Lambda");
  struct Case {
    std::string name;
    AnisoKernel kernel;
  };
  std::vector<Case> cases{{"fractional_laplacian", AnisoKernel::fractional_laplacian(n, s)},
                          {"two_level", AnisoKernel::two_level(n, Lambda)}};
  if (n == 1) run.notes.push_back("on S^0 every even density is constant; the two_level kernel is the constant Lambda");
  CsvTable bt({"kernel", "x0", "x1", "x2", "r", "L_phi"});
  CsvTable tt({"kernel", "x0", "x1", "x2", "r", "L_v"});
  const double tol = p.num("tol"), spread_tol = p.num("spread_tol");
  for (const auto& c : cases) {
    c.kernel.validate();
    const BarrierConstants bc = barrier_constants(c.kernel, s, q);
    BarrierSpec spec;
    spec.c1 = bc.c1;
    const auto lphi = parallel_map<double>(annulus.size(), [&](std::size_t i) { return barrier_L(spec, annulus[i], c.kernel, s, q).value; });
    const auto v = torsion_profile(s);
    const auto lv = parallel_map<double>(interior.size(), [&](std::size_t i) { return eval_L(v, interior[i], c.kernel, s, q).value; });
    for (std::size_t i = 0; i < annulus.size(); ++i) bt.add({c.name, annulus[i][0], annulus[i][1], annulus[i][2], norm(annulus[i]), lphi[i]});
    for (std::size_t i = 0; i < interior.size(); ++i) tt.add({c.name, interior[i][0], interior[i][1], interior[i][2], norm(interior[i]), lv[i]});
    const double worst = *std::max_element(lphi.begin(), lphi.end());
    const auto [lo, hi] = std::minmax_element(lv.begin(), lv.end());
    double mean = 0.0;
    for (double x : lv) mean += x / static_cast<double>(lv.size());
    const double spread = (*hi - *lo) / std::abs(mean);
    run.results[c.name] = {{"k", bc.k}, {"c1", bc.c1}, {"C", bc.C}, {"lambda", c.kernel.lambda}, {"Lambda", c.kernel.Lambda},
                           {"max_L_phi_on_annulus", worst}, {"L_v_mean", mean}, {"L_v_spread", spread}};
    run.checks.add(c.name + ".L_phi_on_annulus", worst <= -1.0 + tol, worst, -1.0 + tol, "<=");
    run.checks.add(c.name + ".L_v_spread", spread <= spread_tol, spread, spread_tol, "<=");
    if (c.name == "fractional_laplacian") {
      const double expected = 1.0 / torsion_constant(n, s);
      run.checks.add("fractional_laplacian.L_v_closed_form", rel_err(mean, expected) <= spread_tol, rel_err(mean, expected), spread_tol, "<=");
    }
  }
  run.files.add("barrier_samples.csv", bt.str());
  run.files.add("torsion_samples.csv", tt.str());
}

// ---------------------------------------------------------------- hopf

struct HopfField {
  std::string kind;
  EvaluableFunction u;           // oriented so that it should be >= 0 near x0
  GrowthCertificate negative;    // bound on u^-
  double V_minus = 0.0;
  double uplus = 0.0;
  double r_bar = 0.5;
  std::optional<double> expected_quotient;
  std::optional<double> vanishing_threshold;
  std::vector<std::string> notes;
};

struct HopfOutcome {
  GrowthTable table;
  ConeQuotient cone;
  ComparisonReport comparison;
  bool growth_holds = false;
};

inline HopfOutcome analyse_hopf(const ProblemGeometry& g, const HopfField& f, const Params& p, std::uint64_t seed,
                                const QuadratureSpec& q) {
  const auto cfg = InteriorSphereConfig::for_ball(g, {1, 0, 0}, f.r_bar, p.integer("halvings"));
  const ConeSpec cone{p.num("beta")};
  const auto kernel = AnisoKernel::fractional_laplacian(g.n, g.s);
  HopfOutcome out;
  out.table = growth_table(f.u, cfg, g.n, g.s, seed, static_cast<std::size_t>(p.integer("samples_per_dim")));
  out.growth_holds = !out.table.sign_violation && out.table.min_growth_ratio() >= p.num("growth_ratio");
  out.comparison = comparison_diagnostics(f.u, cfg, out.table, kernel, g.s, f.negative, f.V_minus, f.uplus, p.integer("spots"), q);
  std::optional<std::pair<double, double>> ar;
  if (out.comparison.qualifying_r) ar = std::pair{*out.comparison.alpha_r, *out.comparison.qualifying_r};
  out.cone = cone_quotient(f.u, cfg, cone, g.s, normal_approach(cfg, g.rho, p.integer("approach_first"), p.integer("approach_last")), ar);
  return out;
}

inline json hopf_json(const HopfOutcome& h) {
  json phi = json::array(), cone = json::array();
  std::vector<double> radii;
  for (const auto& row : h.table.rows) {
    radii.push_back(row.r);
    phi.push_back({{"r", row.r}, {"inf", row.inf}, {"phi", row.phi}});
  }
  for (const auto& row : h.cone.rows) cone.push_back({{"distance", row.distance}, {"quotient", row.quotient}});
  json j = {{"r_schedule", radii},
            {"phi_table", phi},
            {"min_growth_ratio", h.table.min_growth_ratio()},
            {"sign_violation", h.table.sign_violation},
            {"growth_condition_holds", h.growth_holds},
            {"qualifying_r", h.comparison.qualifying_r ? json(*h.comparison.qualifying_r) : json(nullptr)},
            {"cone_estimates", cone},
            {"cone_estimate", h.cone.estimate},
            {"analytic_bounds", h.cone.analytic_bound ? json::array({*h.cone.analytic_bound}) : json::array()},
            {"comparison", {{"barrier_C", h.comparison.barrier_C},
                            {"c_star", h.comparison.c_star},
                            {"potential_term", h.comparison.potential_term},
                            {"margins", h.comparison.margins},
                            {"min_spot", h.comparison.spot_checks.empty() ? json(nullptr) : json(h.comparison.min_spot)}}}};
  return j;
}

inline void hopf_files(const HopfOutcome& h, OutputSet& files, const std::string& prefix = "") {
  CsvTable gt({"r", "inf", "phi", "margin"});
  for (std::size_t i = 0; i < h.table.rows.size(); ++i)
    gt.add({h.table.rows[i].r, h.table.rows[i].inf, h.table.rows[i].phi, h.comparison.margins[i]});
  CsvTable ct({"distance", "quotient"});
  for (const auto& row : h.cone.rows) ct.add({row.distance, row.quotient});
  files.add(prefix + "growth_table.csv", gt.str());
  files.add(prefix + "cone_quotient.csv", ct.str());
}

/// u_eps oriented by its sign near the boundary; V_eps vanishes on every scheduled ball.
inline HopfField counterexample_field(const CounterexampleResult& res) {
  const ProblemGeometry& g = res.geometry;
  HopfField f;
  f.kind = "counterexample";
  const double sign = res.boundary_sign < 0 ? -1.0 : 1.0;
  EvaluableFunction u = res.u.as_function();
  u.values = [prof = res.u, sign](const Vec3& y) { return sign * prof.at(y); };
  double r_sign = 0.0, neg = 0.0;
  for (int k = 0; k <= 4096; ++k) {
    const double r = g.rho * k / 4096.0;
    const double v = sign * res.u(r);
    if (v < 0.0) {
      r_sign = r;
      neg = std::max(neg, -v);
    }
  }
  const double R = g.rho - std::max(r_sign, res.pair.rho0 + res.pair.epsilon);
  f.u = u;
  f.negative.c_bar = std::max(neg, std::numeric_limits<double>::min());
  f.negative.delta = g.s;
  f.negative.x0 = {g.rho, 0, 0};
  f.negative.radius = R;
  f.r_bar = std::min(0.5 * g.rho, 0.5 * R);
  f.vanishing_threshold = 1e-2 * std::max(res.c.c1_eps, res.c.c2_eps) * res.quotient_scale;
  if (sign < 0.0) f.notes.push_back("u_eps is negative near the boundary; the analysis uses -u_eps");
  return f;
}

inline HopfField power_field(const ProblemGeometry& g, double exponent, double scale, bool torsion) {
  HopfField f;
  f.kind = torsion ? "torsion" : "power";
  f.u = torsion_profile(exponent, g.rho, {0, 0, 0}, scale);
  f.negative.c_bar = std::numeric_limits<double>::min();
  f.negative.delta = g.s;
  f.negative.x0 = {g.rho, 0, 0};
  f.negative.radius = g.rho;
  if (torsion) f.expected_quotient = scale * std::pow(2.0 * g.rho, g.s);
  return f;
}

inline void hopf_verify(const ExperimentConfig& cfg, const Params& p, Run& run) {
  const ProblemGeometry& g = cfg.geometry;
  const QuadratureSpec& q = cfg.quadrature;
  const std::string kind = p.str("field");
  const double sign = p.flag("negate") ? -1.0 : 1.0;
  HopfField f;
  if (kind == "torsion") {
    f = power_field(g, g.s, sign * p.num("scale") * torsion_constant(g.n, g.s), true);
    // L u = scale on B_rho, so V = L u / u >= 0 there when scale > 0
    f.V_minus = 0.0;
  } else if (kind == "power") {
    const double e = p.num("exponent") > 0.0 ? p.num("exponent") : 3.0 * g.s;
    f = power_field(g, e, sign * p.num("scale"), false);
    // V^- sampled along the inward normal: V = L u / u
    const auto kernel = AnisoKernel::fractional_laplacian(g.n, g.s);
    for (int k = 2; k <= 12; ++k) {
      const Vec3 x{g.rho * (1.0 - std::ldexp(1.0, -k)), 0, 0};
      const double u = f.u(x);
      if (u <= 0.0) continue;
      f.V_minus = std::max(f.V_minus, -eval_L(f.u, x, kernel, g.s, q).value / u);
      f.uplus = std::max(f.uplus, u);
    }
    f.notes.push_back("V^- and u^+ for the power field are sampled along the inward normal, not certified");
  } else {
    MollifierPair pair = MollifierPair::defaults(g);
    const CounterexampleResult res = build_counterexample(pair, g, q);
    f = counterexample_field(res);
    if (sign < 0.0) {
      f.u.values = [v = f.u.values](const Vec3& y) { return -v(y); };
      f.notes.push_back("negate=true flips the oriented u_eps");
    }
  }
  f.r_bar = std::min(f.r_bar, p.num("r_bar") * g.rho);
  run.notes.insert(run.notes.end(), f.notes.begin(), f.notes.end());
  const HopfOutcome h = analyse_hopf(g, f, p, cfg.seed, q);
  run.results = hopf_json(h);
  run.results["field"] = kind;
  run.results["V_minus_bound"] = f.V_minus;
  run.results["uplus_bound"] = f.uplus;
  hopf_files(h, run.files);

  run.checks.add("no_sign_violation", !h.table.sign_violation, "u >= 0 on every scheduled ball");
  if (kind == "torsion") {
    const double ratio_min = p.num("growth_ratio");
    run.checks.add("growth_ratio_per_halving", h.table.min_growth_ratio() >= ratio_min, h.table.min_growth_ratio(), ratio_min, ">=");
    const double e = rel_err(h.cone.estimate, *f.expected_quotient);
    run.checks.add("cone_estimate_vs_closed_form", e <= p.num("cone_tol"), e, p.num("cone_tol"), "<=");
    run.checks.add("qualifying_radius_found", h.comparison.qualifying_r.has_value(), "comparison chain closes at some scheduled r");
    if (h.cone.analytic_bound)
      run.checks.add("analytic_bound_below_estimate", *h.cone.analytic_bound <= h.cone.estimate, *h.cone.analytic_bound, h.cone.estimate, "<=");
    if (!h.comparison.spot_checks.empty())
      run.checks.add("spot_checks_nonnegative", h.comparison.min_spot >= -1e-6, h.comparison.min_spot, -1e-6, ">=");
  } else if (kind == "power") {
    const bool consistent = !h.growth_holds || h.cone.estimate > 0.0;
    run.checks.add("conclusion_consistent", consistent, "growth condition implies a positive cone quotient");
  } else {
    run.checks.add("growth_condition_fails", !h.growth_holds, h.table.min_growth_ratio(), p.num("growth_ratio"), "<");
    run.checks.add("cone_quotient_vanishes", std::abs(h.cone.estimate) <= *f.vanishing_threshold, h.cone.estimate,
                   *f.vanishing_threshold, "<=");
    run.checks.add("no_qualifying_radius", !h.comparison.qualifying_r.has_value(), "comparison chain does not close");
  }
}

// ---------------------------------------------------------------- counterexample

inline void counterexample(const ExperimentConfig& cfg, const Params& p, Run& run) {
  const ProblemGeometry& g = cfg.geometry;
  const QuadratureSpec& q = cfg.quadrature;
  MollifierPair pair{p.num("epsilon") * g.rho, p.num("rho0") * g.rho, standard_bump};
  CounterexampleOptions opt;
  opt.retries = p.integer("retries");
  opt.grid_radii = p.integer("grid_radii");
  opt.residual_points = p.integer("residual_points");
  const CounterexampleResult res = build_counterexample(pair, g, q, opt);
  run.notes.insert(run.notes.end(), res.notes.begin(), res.notes.end());

  const Vec3 e{g.rho, 0, 0};
  const auto deltas = default_deltas(g.rho);
  const BoundaryQuotient b1 = boundary_quotient([&](const Vec3& x) { return res.u1.at(x); }, e, g, deltas);
  const BoundaryQuotient b2 = boundary_quotient([&](const Vec3& x) { return res.u2.at(x); }, e, g, deltas);
  // combined quotient with c_j taken from the sweeps of u_j themselves
  const double self_cancel = b2.extrapolated * b1.extrapolated - b1.extrapolated * b2.extrapolated;

  // c-limit diagnostics over halvings of epsilon
  json limits = json::array();
  double worst_ratio = 0.0;
  std::vector<double> d1, d2;
  MollifierPair hp = res.pair;
  for (int k = 0; k <= p.integer("limit_halvings"); ++k) {
    const QuotientConstants c = quotient_constants(hp, g, q);
    d1.push_back(std::abs(c.c1_eps - c.c1));
    d2.push_back(std::abs(c.c2_eps - c.c2));
    limits.push_back({{"epsilon", hp.epsilon}, {"c1_eps", c.c1_eps}, {"c2_eps", c.c2_eps}, {"c1", c.c1}, {"c2", c.c2}});
    hp.epsilon *= 0.5;
  }
  json orders = json::array();
  for (std::size_t k = 1; k < d1.size(); ++k) {
    const double r1 = d1[k] / d1[k - 1], r2 = d2[k] / d2[k - 1];
    worst_ratio = std::max({worst_ratio, r1, r2});
    orders.push_back({{"ratio_c1", r1}, {"ratio_c2", r2}, {"order_c1", -std::log2(r1)}, {"order_c2", -std::log2(r2)}});
  }

  // Hopf cross-check on the oriented u_eps
  Params hp_params(json::object(), {{"halvings", 6}, {"beta", std::numbers::pi / 4}, {"growth_ratio", 1.3}, {"spots", 4},
                                    {"samples_per_dim", 4096}, {"approach_first", 4}, {"approach_last", 20}},
                   "counterexample");
  const HopfField hf = counterexample_field(res);
  const HopfOutcome h = analyse_hopf(g, hf, hp_params, cfg.seed, q);

  json residuals = json::array();
  CsvTable rt({"region", "r", "L_u", "V_u", "residual"});
  for (const auto& smp : res.residual_samples) rt.add({std::string("support"), smp.r, smp.Lu, smp.Vu, smp.residual});
  for (const auto& smp : res.off_support_samples) rt.add({std::string("free"), smp.r, smp.Lu, smp.Vu, smp.residual});
  CsvTable qs({"delta", "quotient"});
  for (const auto& [d, v] : res.quotient.sweep) qs.add({d, v});
  run.files.add("quotient_sweep.csv", qs.str());
  run.files.add("residuals.csv", rt.str());
  run.files.add_field("u_eps", res.u_eps);
  run.files.add_field("V_eps", res.V_eps);
  hopf_files(h, run.files, "hopf_");

  json sweep = json::array();
  for (const auto& [d, v] : res.quotient.sweep) sweep.push_back({d, v});
  const double qmax = std::max(res.c.c1_eps, res.c.c2_eps) * res.quotient_scale;
  const double peak = res.pair.peak1(g.n);
  run.results = {{"epsilon", res.pair.epsilon},
                 {"rho0", res.pair.rho0},
                 {"epsilons_tried", res.eps_tried},
                 {"c1_eps", res.c.c1_eps},
                 {"c2_eps", res.c.c2_eps},
                 {"c1", res.c.c1},
                 {"c2", res.c.c2},
                 {"c1_from_sweep", b1.extrapolated},
                 {"c2_from_sweep", b2.extrapolated},
                 {"quotient", {{"extrapolated", res.quotient.extrapolated},
                               {"uncertainty", res.quotient.uncertainty},
                               {"ill_conditioned", res.quotient.ill_conditioned},
                               {"sweep", sweep}}},
                 {"quotient_scale", res.quotient_scale},
                 {"self_cancellation", self_cancel},
                 {"suppo1_margin", res.suppo1_margin},
                 {"suppo2_margin", res.suppo2_margin},
                 {"residual_on_supports", res.residual},
                 {"residual_off_supports", res.off_support_residual},
                 {"phi1_sup", peak},
                 {"boundary_sign", res.boundary_sign},
                 {"u_eps_anisotropy", res.u_eps.max_anisotropy()},
                 {"profile_panels", res.u.panel_count()},
                 {"c_limits", limits},
                 {"c_limit_orders", orders},
                 {"hopf_cross_check", hopf_json(h)}};

  const double qtol = p.num("quotient_tol") * qmax;
  run.checks.add("quotient_vanishes", std::abs(res.quotient.extrapolated) <= qtol, std::abs(res.quotient.extrapolated), qtol, "<=");
  run.checks.add("exact_self_cancellation", self_cancel == 0.0, self_cancel, 0.0, "==");
  run.checks.add("suppo1_margin", res.suppo1_margin > 0.0, res.suppo1_margin, 0.0, ">");
  run.checks.add("suppo2_margin", res.suppo2_margin > 0.0, res.suppo2_margin, 0.0, ">");
  const double rtol = p.num("residual_tol") * peak;
  run.checks.add("residual_on_supports", res.residual <= rtol, res.residual, rtol, "<=");
  run.checks.add("residual_off_supports", res.off_support_residual <= rtol, res.off_support_residual, rtol, "<=");
  run.checks.add("boundary_sign_constant", res.boundary_sign != 0, "u_eps keeps one sign on rho - 0.05 rho < |x| < rho");
  run.checks.add("c_bracketed", res.c_bracketed(), "c_j/2 < c_j,eps < 2 c_j");
  const double c1tol = 1e-4 * res.c.c1_eps + 2.0 * b1.uncertainty, c2tol = 1e-4 * res.c.c2_eps + 2.0 * b2.uncertainty;
  run.checks.add("c1_consistency", std::abs(b1.extrapolated - res.c.c1_eps) <= c1tol, std::abs(b1.extrapolated - res.c.c1_eps), c1tol, "<=");
  run.checks.add("c2_consistency", std::abs(b2.extrapolated - res.c.c2_eps) <= c2tol, std::abs(b2.extrapolated - res.c.c2_eps), c2tol, "<=");
  run.checks.add("radial_field", res.u_eps.max_anisotropy() <= 1e-12, res.u_eps.max_anisotropy(), 1e-12, "<=");
  run.checks.add("c_limits_converge", worst_ratio <= 0.625, worst_ratio, 0.625, "<=");
  run.checks.add("hopf_growth_condition_fails", !h.growth_holds, h.table.min_growth_ratio(), 1.3, "<");
  run.checks.add("hopf_cone_quotient_vanishes", std::abs(h.cone.estimate) <= *hf.vanishing_threshold, h.cone.estimate,
                 *hf.vanishing_threshold, "<=");
}

// ---------------------------------------------------------------- sphere inequality

inline void sphere_inequality_run(const ExperimentConfig& cfg, const Params& p, Run& run) {
  const QuadratureSpec& q = cfg.quadrature;
  const double tol = p.num("tol");
  CsvTable t({"n", "s", "lhs", "closed_form", "sphere_area"});
  json rows = json::array();
  for (double s : p.list("s_values")) {
    for (int n : {2, 3}) {
      const SphereInequality r = sphere_inequality(n, s, q);
      t.add({static_cast<long long>(n), s, r.lhs, r.closed_form, r.rhs});
      rows.push_back({{"n", n}, {"s", s}, {"lhs", r.lhs}, {"closed_form", r.closed_form}, {"sphere_area", r.rhs}});
      const std::string tag = "n" + std::to_string(n) + "_s" + format_double(s);
      run.checks.add(tag + ".closed_form", rel_err(r.lhs, r.closed_form) <= tol, rel_err(r.lhs, r.closed_form), tol, "<=");
      run.checks.add(tag + ".exceeds_sphere_area", r.lhs > r.rhs, r.lhs, r.rhs, ">");
    }
    const PointSphereIdentity one = point_sphere_identity(s);
    t.add({1LL, s, one.lhs, one.lhs, one.rhs});
    rows.push_back({{"n", 1}, {"s", s}, {"lhs", one.lhs}, {"rhs", one.rhs}, {"equal", one.equal()}});
    run.checks.add("n1_s" + format_double(s) + ".differs_from_two", !one.equal(), one.lhs, one.rhs, "!=");
  }
  run.files.add("sphere_inequality.csv", t.str());
  run.results = {{"rows", rows}};
  run.notes.push_back("independent of the configured geometry");
}

// ---------------------------------------------------------------- F(sigma)

inline void f_sigma_run(const ExperimentConfig& cfg, const Params& p, Run& run) {
  const ProblemGeometry& g = cfg.geometry;
  if (!(2.0 * g.s < g.n)) {
    run.applicable = false;
    run.notes.push_back("needs 2s < n; for 2s = n the function F is constant");
    return;
  }
  const FSigmaReport r = f_sigma_check(g.n, g.s, p.integer("pairs"), cfg.seed);
  CsvTable t({"sigma", "F"});
  for (int k = -1280; k <= 1280; k += 8) {
    const double sigma = std::exp2(k / 64.0);
    t.add({sigma, f_sigma(sigma, g.n, g.s)});
  }
  run.files.add("f_sigma.csv", t.str());
  run.results = {{"argmin", r.argmin},
                 {"F_at_one", r.f_at_one},
                 {"F_at_one_expected", r.f_at_one_expected},
                 {"decreasing_below_one", r.decreasing_below_one},
                 {"increasing_above_one", r.increasing_above_one},
                 {"pairs", r.pairs},
                 {"worst_relative_slack", r.worst_slack},
                 {"tight_pairs", r.tight_pairs},
                 {"tight_pairs_with_a_ne_b", r.tight_pairs_with_a_ne_b}};
  run.checks.add("argmin_at_one", std::abs(r.argmin - 1.0) <= 1e-10, std::abs(r.argmin - 1.0), 1e-10, "<=");
  run.checks.add("F_at_one", rel_err(r.f_at_one, r.f_at_one_expected) <= 1e-12, rel_err(r.f_at_one, r.f_at_one_expected), 1e-12, "<=");
  run.checks.add("monotone_on_each_side", r.decreasing_below_one && r.increasing_above_one, "F decreases on (0,1) and increases on (1,inf)");
  run.checks.add("power_inequality", r.worst_slack >= -1e-12, r.worst_slack, -1e-12, ">=");
  run.checks.add("equality_only_at_a_eq_b", r.tight_pairs_with_a_ne_b == 0, static_cast<double>(r.tight_pairs_with_a_ne_b), 0.0, "==");
}

// ---------------------------------------------------------------- eigen

inline void eigen_radial(const ExperimentConfig& cfg, const Params& p, Run& run) {
  const ProblemGeometry& g = cfg.geometry;
  const QuadratureSpec& q = cfg.quadrature;
  std::vector<RadialEigenpair> pairs;
  json levels = json::array();
  for (double N : p.list("grids")) {
    pairs.push_back(radial_eigenpair(g, RadialGrid::gauss_legendre(g.rho, static_cast<int>(N)), q));
    levels.push_back({{"nodes", static_cast<int>(N)}, {"lambda", pairs.back().lambda}, {"residual", pairs.back().residual},
                      {"iterations", pairs.back().iterations}});
  }
  double worst_change = 0.0;
  CsvTable rt({"nodes", "lambda", "rel_change"});
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const double ch = i ? rel_err(pairs[i].lambda, pairs[i - 1].lambda) : 0.0;
    worst_change = std::max(worst_change, ch);
    rt.add({static_cast<long long>(pairs[i].op->grid.nodes.size()), pairs[i].lambda, ch});
  }
  const RadialEigenpair& fine = pairs.back();
  bool positive = true;
  CsvTable ft({"r", "u"});
  for (std::size_t i = 0; i < fine.values.size(); ++i) {
    positive = positive && fine.values[i] > 0.0;
    ft.add({fine.op->grid.nodes[i], fine.values[i]});
  }
  const BoundaryQuotient bq = boundary_quotient([&](const Vec3& x) { return fine.at(x); }, {g.rho, 0, 0}, g, default_deltas(g.rho));
  const double scale = 1.0 / std::pow(g.rho, g.s);  // sup-normalized eigenfunction over rho^s
  // sign changes on a geometric approach to the boundary; a finite sample can only illustrate
  const int zero_points = p.integer("zero_points");
  const auto near = parallel_map<double>(static_cast<std::size_t>(zero_points), [&](std::size_t k) {
    return fine(g.rho * (1.0 - 0.1 * std::pow(1e-4, static_cast<double>(k) / (zero_points - 1))));
  });
  int sign_changes = 0;
  for (std::size_t k = 1; k < near.size(); ++k)
    if ((near[k] > 0.0) != (near[k - 1] > 0.0)) ++sign_changes;
  run.notes.push_back("zero count near the boundary is illustrative only; a finite sample cannot exclude accumulating zeros");
  run.files.add("eigen_refinement.csv", rt.str());
  run.files.add("eigen_function.csv", ft.str());
  run.results = {{"levels", levels}, {"lambda", fine.lambda}, {"max_rel_change", worst_change},
                 {"boundary_quotient", bq.extrapolated}, {"quotient_uncertainty", bq.uncertainty},
                 {"interior_scale", scale},
                 {"zero_count_near_boundary", {{"points", zero_points}, {"band", {0.9 * g.rho, g.rho * (1.0 - 1e-5)}},
                                               {"sign_changes", sign_changes}, {"illustrative", true}}}};
  const double ctol = p.num("refine_tol");
  run.checks.add("refinement_change", worst_change <= ctol, worst_change, ctol, "<=");
  run.checks.add("residual", fine.residual < 1e-8, fine.residual, 1e-8, "<");
  run.checks.add("positive_on_grid", positive, "leading eigenfunction is positive at every node");
  const double qmin = p.num("quotient_ratio") * scale;
  run.checks.add("boundary_quotient_bounded_below", bq.extrapolated >= qmin, bq.extrapolated, qmin, ">=");
  if (g.n == 1 && g.s == 0.5) {
    // first eigenvalue of the half-Laplacian on (-1, 1), scaled to (-rho, rho)
    const double ref = 1.1577738836977 / g.rho;
    run.results["lambda_reference"] = ref;
    run.checks.add("interval_reference", rel_err(fine.lambda, ref) <= 0.05, rel_err(fine.lambda, ref), 0.05, "<=");
  }
}

// ---------------------------------------------------------------- unbounded V

inline void unbounded_v(const ExperimentConfig& cfg, const Params& p, Run& run) {
  const ProblemGeometry& g = cfg.geometry;
  std::vector<double> deltas = p.list("deltas");
  for (double& d : deltas) d *= g.rho;
  const double fast = p.num("fast_exponent") > 0.0 ? p.num("fast_exponent") : 3.0 * g.s;
  const UnboundedVReport rep = unbounded_v_example(g, fast, deltas, cfg.quadrature);
  CsvTable t({"profile", "delta", "u", "L_u", "V", "dropped"});
  auto emit = [&](const UnboundedVCase& c) {
    json rows = json::array();
    bool positive = true;
    for (const auto& r : c.rows) {
      t.add({c.profile, r.delta, r.u, r.Lu, r.V, static_cast<long long>(r.dropped)});
      rows.push_back({{"delta", r.delta}, {"u", r.u}, {"L_u", r.Lu}, {"V", r.V}, {"dropped", r.dropped}});
      positive = positive && r.u > 0.0;
    }
    run.results[c.profile] = {{"exponent", c.exponent}, {"slope", c.slope}, {"sup_growth", c.sup_growth}, {"rows", rows}};
    return positive;
  };
  const bool pos_control = emit(rep.control);
  const bool pos_fast = emit(rep.fast);
  run.files.add("unbounded_v.csv", t.str());
  const Vec3 x0{g.rho, 0, 0};
  const auto fast_u = torsion_profile(fast, g.rho);
  const auto control_u = torsion_profile(g.s, g.rho);
  const double q_fast = boundary_quotient([&](const Vec3& x) { return fast_u(x); }, x0, g, default_deltas(g.rho)).extrapolated;
  const double q_control = boundary_quotient([&](const Vec3& x) { return control_u(x); }, x0, g, default_deltas(g.rho)).extrapolated;
  run.results["boundary_quotient_fast"] = q_fast;
  run.results["boundary_quotient_control"] = q_control;
  run.checks.add("profiles_positive_inside", pos_control && pos_fast, "u > 0 at every sweep point");
  run.checks.add("control_rate", std::abs(rep.control.slope + g.s) <= 0.1, rep.control.slope, -g.s, "~ (+-0.1)");
  run.checks.add("fast_blows_up_faster", rep.fast_blows_up_faster() && rep.fast.sup_growth > rep.control.sup_growth,
                 rep.fast.slope, rep.control.slope, "<");
  run.checks.add("fast_quotient_vanishes", std::abs(q_fast) <= 0.05 * q_control, std::abs(q_fast), 0.05 * q_control, "<=");
}

}  // namespace detail

inline const std::vector<Experiment>& experiments() {
  using detail::require_deltas;
  static const std::vector<Experiment> list = {
      {"torsion-calibrate", "Dirichlet solve of (-Delta)^s u = 1 on the ball against the closed-form torsion function",
       [](const ExperimentConfig&) {
         return json{{"points", 20}, {"max_radius", 0.9}, {"tol", 1e-3}, {"grid_radii", 128}, {"grid_sphere_degree", 8}};
       },
       [](const ExperimentConfig&, const Params& p) {
         require(p.integer("points") >= 1 && p.integer("points") <= 10000, "points must lie in [1, 10000]");
         require(p.num("max_radius") > 0.0 && p.num("max_radius") < 1.0, "max_radius must lie in (0, 1)");
         require(p.num("tol") > 0.0, "tol must be positive");
         require(p.integer("grid_radii") >= 2 && p.integer("grid_radii") <= 4096, "grid_radii must lie in [2, 4096]");
         require(p.integer("grid_sphere_degree") >= 1, "grid_sphere_degree must be >= 1");
       },
       detail::torsion_calibrate},
      {"green-expansion", "Boundary expansion G((rho - delta) e, z) = a0(z, e) delta^s (1 + O(delta)) of the ball Green function",
       [](const ExperimentConfig&) {
         return json{{"points", 5}, {"z_radius", 0.5}, {"deltas", json::array()}, {"ratio_tol", 0.05}, {"decay_factor", 1.5}};
       },
       [](const ExperimentConfig&, const Params& p) {
         require(p.integer("points") >= 1, "points must be >= 1");
         require(p.num("z_radius") > 0.0 && p.num("z_radius") < 1.0, "z_radius must lie in (0, 1)");
         require_deltas(p.list("deltas"), "deltas");
         require(p.list("deltas").empty() || p.list("deltas").size() >= 2, "deltas needs at least two entries");
       },
       detail::green_expansion},
      {"interior-blowup", "Limit of rho0^{n-2s} G(rho0 e, rho0 y) as rho0 -> 0 for n > 2s",
       [](const ExperimentConfig&) { return json{{"pairs", 5}, {"rho0_factors", {1e-1, 1e-2, 1e-3}}, {"tol", 0.01}}; },
       [](const ExperimentConfig&, const Params& p) {
         require(p.integer("pairs") >= 1, "pairs must be >= 1");
         require(!p.list("rho0_factors").empty(), "rho0_factors must not be empty");
         require_deltas(p.list("rho0_factors"), "rho0_factors");
       },
       detail::interior_blowup},
      {"barrier-check", "Barrier phi = v + C1 eta with L phi <= -1 on B_1 minus B_1/2, and L v constant on B_1",
       [](const ExperimentConfig&) {
         return json{{"points", 30}, {"torsion_points", 10}, {"torsion_radius", 0.9}, {"Lambda", 1.0}, {"tol", 0.05}, {"spread_tol", 0.01}};
       },
       [](const ExperimentConfig&, const Params& p) {
         require(p.integer("points") >= 1 && p.integer("torsion_points") >= 2, "need points >= 1 and torsion_points >= 2");
         require(p.num("torsion_radius") > 0.0 && p.num("torsion_radius") < 1.0, "torsion_radius must lie in (0, 1)");
         require(p.num("Lambda") > 0.0, "Lambda must be positive");
       },
       detail::barrier_check},
      {"hopf-verify", "Growth condition, cone quotient and comparison chain at a boundary point for a given field",
       [](const ExperimentConfig&) {
         return json{{"field", "torsion"}, {"exponent", 0.0}, {"scale", 1.0}, {"negate", false}, {"r_bar", 0.5},
                     {"halvings", 6}, {"beta", std::numbers::pi / 4}, {"approach_first", 4}, {"approach_last", 20},
                     {"growth_ratio", 1.3}, {"cone_tol", 0.05}, {"spots", 8}, {"samples_per_dim", 4096}};
       },
       [](const ExperimentConfig&, const Params& p) {
         const std::string f = p.str("field");
         require(f == "torsion" || f == "power" || f == "counterexample", "field must be torsion, power or counterexample");
         require(p.num("r_bar") > 0.0 && p.num("r_bar") <= 1.0, "r_bar must lie in (0, 1]");
         require(p.integer("halvings") >= 1 && p.integer("halvings") <= 30, "halvings must lie in [1, 30]");
         require(p.num("beta") > 0.0 && p.num("beta") < 0.5 * std::numbers::pi, "beta must lie in (0, pi/2)");
         require(p.integer("approach_first") >= 1 && p.integer("approach_last") > p.integer("approach_first") &&
                     p.integer("approach_last") <= 40,
                 "approach indices must satisfy 1 <= first < last <= 40");
         require(p.integer("spots") >= 0 && p.integer("samples_per_dim") >= 16, "spots >= 0 and samples_per_dim >= 16");
         require(p.num("exponent") >= 0.0, "exponent must be nonnegative (0 selects 3s)");
         require(p.num("scale") != 0.0, "scale must be nonzero");
       },
       detail::hopf_verify},
      {"counterexample", "Radial u with (-Delta)^s u = V u, u of one sign near the boundary and vanishing boundary quotient",
       [](const ExperimentConfig&) {
         return json{{"epsilon", 0.05}, {"rho0", 0.5}, {"retries", 4}, {"grid_radii", 128}, {"residual_points", 10},
                     {"quotient_tol", 1e-2}, {"residual_tol", 1e-2}, {"limit_halvings", 3}};
       },
       [](const ExperimentConfig& cfg, const Params& p) {
         MollifierPair pair{p.num("epsilon") * cfg.geometry.rho, p.num("rho0") * cfg.geometry.rho, standard_bump};
         pair.validate(cfg.geometry);
         require(p.integer("retries") >= 0 && p.integer("retries") <= 8, "retries must lie in [0, 8]");
         require(p.integer("grid_radii") >= 16, "grid_radii must be >= 16");
         require(p.integer("residual_points") >= 2, "residual_points must be >= 2");
         require(p.integer("limit_halvings") >= 1 && p.integer("limit_halvings") <= 6, "limit_halvings must lie in [1, 6]");
       },
       detail::counterexample},
      {"sphere-inequality", "Integral of |e - w|^{2s-n} over the unit sphere against its area, s in (1/2, 1)",
       [](const ExperimentConfig&) { return json{{"s_values", {0.6, 0.75, 0.9}}, {"tol", 1e-6}}; },
       [](const ExperimentConfig&, const Params& p) {
         require(!p.list("s_values").empty(), "s_values must not be empty");
         for (double s : p.list("s_values")) require(s > 0.5 && s < 1.0, "s_values must lie in (1/2, 1)");
       },
       detail::sphere_inequality_run},
      {"f-sigma", "F(sigma) = (1 + sigma^{2s-n}) / (1 + sigma)^{2s-n} is minimal at sigma = 1; the matching power inequality",
       [](const ExperimentConfig&) { return json{{"pairs", 1000}}; },
       [](const ExperimentConfig&, const Params& p) { require(p.integer("pairs") >= 1, "pairs must be >= 1"); },
       detail::f_sigma_run},
      {"eigen-radial", "Leading radial Dirichlet eigenpair of (-Delta)^s on the ball and its boundary quotient",
       [](const ExperimentConfig&) { return json{{"grids", {64, 128, 256}}, {"refine_tol", 0.02}, {"quotient_ratio", 0.1}, {"zero_points", 200}}; },
       [](const ExperimentConfig&, const Params& p) {
         const auto gr = p.list("grids");
         require(!gr.empty(), "grids must not be empty");
         for (std::size_t i = 0; i < gr.size(); ++i) {
           require(gr[i] == std::floor(gr[i]) && gr[i] >= 64 && gr[i] <= 2048, "grid sizes must be integers in [64, 2048]");
           require(i == 0 || gr[i] > gr[i - 1], "grid sizes must increase");
         }
         require(p.integer("zero_points") >= 2 && p.integer("zero_points") <= 100000, "zero_points must lie in [2, 100000]");
       },
       detail::eigen_radial},
      {"unbounded-v", "V = (-Delta)^s u / u along the inward normal for the torsion profile and a faster-decaying profile",
       [](const ExperimentConfig&) {
         std::vector<double> d;
         for (int k = 0; k < 8; ++k) d.push_back(0.1 * std::ldexp(1.0, -k));
         return json{{"fast_exponent", 0.0}, {"deltas", d}};
       },
       [](const ExperimentConfig& cfg, const Params& p) {
         require_deltas(p.list("deltas"), "deltas");
         require(p.list("deltas").size() >= 2, "deltas needs at least two entries");
         require(p.num("fast_exponent") == 0.0 || p.num("fast_exponent") > cfg.geometry.s, "fast_exponent must exceed s (0 selects 3s)");
       },
       detail::unbounded_v},
  };
  return list;
}

inline const Experiment& find_experiment(const std::string& name) {
  for (const auto& e : experiments())
    if (e.name == name) return e;
  throw ConfigurationError("unknown experiment '" + name + "'");
}

inline std::string report_name(const std::string& experiment) {
  std::string s = experiment;
  std::replace(s.begin(), s.end(), '-', '_');
  return s + "_report.json";
}

struct Outcome {
  json report;
  OutputSet files;
  bool passed = false;
  bool error = false;
};

/// Validation failures throw ConfigurationError before any work is done.
/// Failures during the run produce an error report only.
inline Outcome run_experiment(const std::string& name, const ExperimentConfig& cfg) {
  const Experiment& ex = find_experiment(name);
  validate_config(cfg);
  const Params params(cfg.params, ex.defaults(cfg), name);
  ex.validate(cfg, params);

  const auto t0 = std::chrono::steady_clock::now();
  Outcome out;
  Run run;
  json report = {{"schema_version", kSchemaVersion},
                 {"tool_version", kToolVersion},
                 {"subcommand", name},
                 {"statement", ex.statement},
                 {"config", {{"geometry", to_json(cfg.geometry)},
                             {"quadrature", to_json(cfg.quadrature)},
                             {"seed", cfg.seed},
                             {"params", params.echo()}}}};
  try {
    ex.run(cfg, params, run);
    report["results"] = run.results;
    report["checks"] = run.checks.to_json();
    report["failed_checks"] = run.checks.failed();
    report["applicable"] = run.applicable;
    report["notes"] = run.notes;
    report["passed"] = run.checks.passed();
    out.passed = run.checks.passed();
    out.files = std::move(run.files);
  } catch (const std::exception& e) {
    report["error"] = e.what();
    report["passed"] = false;
    out.error = true;
    out.files = OutputSet{};
  }
  report["wall_time_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  out.files.add_json(report_name(name), report);
  out.report = std::move(report);
  return out;
}

inline std::string geometry_dir(const ProblemGeometry& g) {
  return "n" + std::to_string(g.n) + "_s" + format_double(g.s) + "_rho" + format_double(g.rho);
}

/// Every experiment with default parameters on each geometry; geometry-free
/// experiments run once.
inline Outcome run_suite(const ExperimentConfig& base) {
  validate_config(base);
  const Params params(base.params, json{{"geometries", {{1, 0.5}, {2, 0.5}, {3, 0.75}}}}, "suite");
  std::vector<ProblemGeometry> geoms;
  for (const auto& item : params.raw("geometries")) {
    require(item.is_array() && item.size() == 2 && item[0].is_number_integer() && item[1].is_number(),
            "suite geometries must be [n, s] pairs");
    ProblemGeometry g{item[0].get<int>(), item[1].get<double>(), base.geometry.rho};
    ExperimentConfig c = base;
    c.geometry = g;
    validate_config(c);
    geoms.push_back(g);
  }
  require(!geoms.empty(), "suite needs at least one geometry");

  const auto t0 = std::chrono::steady_clock::now();
  Outcome out;
  out.passed = true;
  json entries = json::array();
  auto record = [&](const std::string& dir, const std::string& name, const Outcome& o) {
    out.files.merge(dir, o.files);
    out.passed = out.passed && o.passed;
    out.error = out.error || o.error;
    entries.push_back({{"subcommand", name},
                       {"dir", dir},
                       {"passed", o.passed},
                       {"error", o.error},
                       {"failed_checks", o.report.value("failed_checks", json::array())}});
  };
  ExperimentConfig free_cfg = base;
  free_cfg.params = json::object();
  record("sphere-inequality", "sphere-inequality", run_experiment("sphere-inequality", free_cfg));
  for (const auto& g : geoms) {
    ExperimentConfig c = base;
    c.geometry = g;
    c.params = json::object();
    for (const auto& ex : experiments()) {
      if (ex.name == "sphere-inequality") continue;
      record(geometry_dir(g) + "/" + ex.name, ex.name, run_experiment(ex.name, c));
    }
  }
  json geo = json::array();
  for (const auto& g : geoms) geo.push_back(to_json(g));
  out.report = {{"schema_version", kSchemaVersion},
                {"tool_version", kToolVersion},
                {"subcommand", "suite"},
                {"statement", "all experiments with default parameters"},
                {"config", {{"quadrature", to_json(base.quadrature)}, {"seed", base.seed}, {"geometries", geo}}},
                {"experiments", entries},
                {"passed", out.passed}};
  out.report["wall_time_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  out.files.add_json("suite_report.json", out.report);
  return out;
}

}  // namespace fraclab::cli
