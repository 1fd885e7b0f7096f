#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "fraclab/barrier.hpp"
#include "fraclab/errors.hpp"
#include "fraclab/greenball.hpp"
#include "fraclab/operator.hpp"
#include "fraclab/parallel.hpp"
#include "fraclab/sphere.hpp"
#include "fraclab/vec.hpp"

namespace fraclab {

/// Boundary point x0 with inward normal nu and balls B_r(x0 + r nu) for a
/// decreasing schedule of radii.
struct InteriorSphereConfig {
  Vec3 x0{};
  Vec3 nu{};
  std::vector<double> radii;

  Vec3 center(double r) const { return x0 + r * nu; }

  /// x0 = rho e, nu = -e, radii r_bar 2^{-k} for k = 0..halvings.
  static InteriorSphereConfig for_ball(const ProblemGeometry& g, const Vec3& e, double r_bar, int halvings = 12) {
    InteriorSphereConfig c;
    const Vec3 unit = normalized(e);
    c.x0 = g.rho * unit;
    c.nu = -1.0 * unit;
    for (int k = 0; k <= halvings; ++k) c.radii.push_back(std::ldexp(r_bar, -k));
    c.validate(g);
    return c;
  }

  /// For the ball domain B_r(x_r) lies in B_rho iff r <= rho when x0 is on the sphere and nu points to the centre.
  void validate(const ProblemGeometry& g) const {
    if (std::abs(norm(nu) - 1.0) > 1e-12) throw ConfigurationError("interior sphere: nu must be a unit vector");
    if (std::abs(norm(x0) - g.rho) > 1e-12 * g.rho) throw ConfigurationError("interior sphere: x0 must lie on the boundary");
    if (std::abs(dot(nu, x0) + g.rho) > 1e-12 * g.rho) throw ConfigurationError("interior sphere: nu must be the inward normal");
    if (radii.empty()) throw ConfigurationError("interior sphere: empty radius schedule");
    for (std::size_t i = 0; i < radii.size(); ++i) {
      if (!(radii[i] > 0.0 && radii[i] <= g.rho)) throw ConfigurationError("interior sphere: radii must lie in (0, rho]");
      if (i > 0 && !(radii[i] < radii[i - 1])) throw ConfigurationError("interior sphere: radii must decrease strictly");
    }
  }
};

/// C_beta: points whose direction from x0 makes an angle at most pi/2 - beta with nu.
struct ConeSpec {
  double beta = std::numbers::pi / 4.0;

  double c_beta() const { return std::cos(0.5 * std::numbers::pi - beta); }

  void validate() const {
    if (!(beta > 0.0 && beta < 0.5 * std::numbers::pi)) throw ConfigurationError("cone angle beta must lie in (0, pi/2)");
  }
};

/// Boundary of the cone counts as inside, up to 1e-12 relative.
inline bool cone_contains(const Vec3& x, const InteriorSphereConfig& cfg, const ConeSpec& cone) {
  const Vec3 d = x - cfg.x0;
  const double len = norm(d);
  if (len == 0.0) return false;
  return dot(d, cfg.nu) >= cone.c_beta() * len * (1.0 - 1e-12);
}

struct GrowthRow {
  double r = 0.0;
  double inf = 0.0;   // inf of |u| over B_{r/2}(x_r)
  double phi = 0.0;   // inf / r^{2s}
  Vec3 argmin{};
};

struct GrowthTable {
  std::vector<GrowthRow> rows;
  bool sign_violation = false;  // u < 0 seen inside a scheduled ball
  std::optional<Vec3> violation_point;

  /// Smallest ratio Phi(r_{k+1}) / Phi(r_k) over consecutive rows.
  double min_growth_ratio() const {
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < rows.size(); ++i) m = std::min(m, rows[i].phi / rows[i - 1].phi);
    return m;
  }
};

/// Points used for inf over B_{r/2}(x_r): n * 4096 Halton points in the ball
/// plus sphere-rule points on its boundary, which always include x_r +- (r/2) nu.
inline std::vector<Vec3> half_ball_samples(int n, const Vec3& center, double radius, const Vec3& nu,
                                           std::size_t interior, std::uint64_t seed) {
  std::vector<Vec3> pts = ball_samples(n, center, radius, interior, seed);
  pts.push_back(center + radius * nu);
  pts.push_back(center - radius * nu);
  for (const auto& node : sphere_quadrature(n, 16)) pts.push_back(center + radius * node.point);
  return pts;
}

template <class Field>
GrowthTable growth_table(Field&& u, const InteriorSphereConfig& cfg, int n, FracOrder s, std::uint64_t seed = 1,
                         std::size_t samples_per_dim = 4096) {
  GrowthTable table;
  for (double r : cfg.radii) {
    const auto pts = half_ball_samples(n, cfg.center(r), 0.5 * r, cfg.nu, samples_per_dim * static_cast<std::size_t>(n), seed);
    const auto vals = parallel_map<double>(pts.size(), [&](std::size_t i) { return u(pts[i]); });
    GrowthRow row;
    row.r = r;
    row.inf = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (vals[i] < 0.0 && !table.sign_violation) {
        table.sign_violation = true;
        table.violation_point = pts[i];
      }
      if (std::abs(vals[i]) < row.inf) {
        row.inf = std::abs(vals[i]);
        row.argmin = pts[i];
      }
    }
    row.phi = row.inf / std::pow(r, 2.0 * s);
    table.rows.push_back(row);
  }
  return table;
}

/// x_k = x0 + rho 2^{-k} nu for k = first..last.
inline std::vector<Vec3> normal_approach(const InteriorSphereConfig& cfg, double rho, int first = 4, int last = 20) {
  std::vector<Vec3> pts;
  for (int k = first; k <= last; ++k) pts.push_back(cfg.x0 + std::ldexp(rho, -k) * cfg.nu);
  return pts;
}

struct ConeQuotientRow {
  Vec3 x{};
  double distance = 0.0;  // |x - x0|
  double quotient = 0.0;  // u(x) / |x - x0|^s
};

struct ConeQuotient {
  std::vector<ConeQuotientRow> rows;
  double estimate = 0.0;  // min over the second half of the schedule
  std::optional<double> analytic_bound;
};

/// Lower bound 2^s alpha_r c_beta^s / r^s that the comparison argument gives for u / |x - x0|^s in C_beta.
inline double cone_analytic_bound(double alpha_r, double r, const ConeSpec& cone, double s) {
  return std::pow(2.0, s) * alpha_r * std::pow(cone.c_beta(), s) / std::pow(r, s);
}

template <class Field>
ConeQuotient cone_quotient(Field&& u, const InteriorSphereConfig& cfg, const ConeSpec& cone, FracOrder s,
                           const std::vector<Vec3>& approach, std::optional<std::pair<double, double>> alpha_and_r = {}) {
  cone.validate();
  if (approach.empty()) throw ConfigurationError("cone_quotient: empty approach schedule");
  for (std::size_t i = 0; i < approach.size(); ++i)
    if (!cone_contains(approach[i], cfg, cone))
      throw DomainError("cone_quotient: approach point " + std::to_string(i) + " lies outside the cone");
  ConeQuotient out;
  for (const Vec3& x : approach) {
    ConeQuotientRow row;
    row.x = x;
    row.distance = distance(x, cfg.x0);
    row.quotient = u(x) / std::pow(row.distance, s);
    out.rows.push_back(row);
  }
  out.estimate = std::numeric_limits<double>::infinity();
  for (std::size_t i = out.rows.size() / 2; i < out.rows.size(); ++i) out.estimate = std::min(out.estimate, out.rows[i].quotient);
  if (alpha_and_r) out.analytic_bound = cone_analytic_bound(alpha_and_r->first, alpha_and_r->second, cone, s);
  return out;
}

struct SpotCheck {
  Vec3 x{};
  double value = 0.0;  // L(u - w)(x) = L u^+ (x) - L psi(x)
  double error = 0.0;
};

struct ComparisonReport {
  std::vector<double> radii;
  std::vector<double> phi;
  std::vector<double> margins;  // Phi(r)/C - C_star - |V^- u^+|
  double barrier_C = 0.0;
  double c_star = 0.0;
  double potential_term = 0.0;
  std::optional<double> qualifying_r;
  std::optional<double> alpha_r;
  std::vector<SpotCheck> spot_checks;
  double min_spot = std::numeric_limits<double>::infinity();

  bool growth_condition_failed() const { return !qualifying_r; }
};

/// Evaluates Phi(r)/C - C_star - V_minus_bound * uplus_bound along the
/// schedule, takes the first (largest) r where it is nonnegative, and checks
/// L(u - w) >= 0 there at `spots` points of B_r(x_r) \ B_{r/2}(x_r) with
/// w = psi - u^-, psi = alpha_r phi((x - x_r)/r), alpha_r = inf / C.
/// C_star is the tail bound of u^- at d0 = R/2, R taken from `negative_part`.
inline ComparisonReport comparison_diagnostics(const EvaluableFunction& u, const InteriorSphereConfig& cfg,
                                               const GrowthTable& table, const AnisoKernel& kernel, FracOrder s,
                                               const GrowthCertificate& negative_part, double V_minus_bound,
                                               double uplus_bound, int spots = 8, const QuadratureSpec& q = {}) {
  if (!(V_minus_bound >= 0.0) || !(uplus_bound >= 0.0)) throw ConfigurationError("comparison: bounds must be nonnegative");
  const BarrierConstants bc = barrier_constants(kernel, s, q);
  ComparisonReport rep;
  rep.barrier_C = bc.C;
  rep.c_star = tail_bound(negative_part, 0.5 * negative_part.radius, kernel, s);
  rep.potential_term = V_minus_bound * uplus_bound;
  for (const auto& row : table.rows) {
    rep.radii.push_back(row.r);
    rep.phi.push_back(row.phi);
    const double margin = row.phi / bc.C - rep.c_star - rep.potential_term;
    rep.margins.push_back(margin);
    if (!rep.qualifying_r && margin >= 0.0) {
      rep.qualifying_r = row.r;
      rep.alpha_r = row.inf / bc.C;
    }
  }
  if (!rep.qualifying_r) return rep;

  const double r = *rep.qualifying_r;
  BarrierSpec psi;
  psi.center = cfg.center(r);
  psi.radius = r;
  psi.c1 = bc.c1;
  psi.alpha = *rep.alpha_r;
  EvaluableFunction uplus = u;
  uplus.values = [f = u.values](const Vec3& y) { return std::max(0.0, f(y)); };
  std::vector<Vec3> pts;
  for (const Vec3& p : ball_samples(kernel.n, psi.center, r, 64 * static_cast<std::size_t>(spots), 17)) {
    const double d = distance(p, psi.center);
    if (d > 0.5 * r && d < 0.95 * r) pts.push_back(p);
    if (static_cast<int>(pts.size()) == spots) break;
  }
  rep.spot_checks = parallel_map<SpotCheck>(pts.size(), [&](std::size_t i) {
    const EvalResult lu = eval_L(uplus, pts[i], kernel, s, q);
    const EvalResult lpsi = barrier_L(psi, pts[i], kernel, s, q);
    return SpotCheck{pts[i], lu.value - lpsi.value, lu.error + lpsi.error};
  });
  for (const auto& c : rep.spot_checks) rep.min_spot = std::min(rep.min_spot, c.value);
  return rep;
}

}  // namespace fraclab
