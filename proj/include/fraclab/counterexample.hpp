#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "fraclab/dirichlet.hpp"
#include "fraclab/errors.hpp"
#include "fraclab/greenball.hpp"
#include "fraclab/operator.hpp"
#include "fraclab/quadrature.hpp"
#include "fraclab/specialfn.hpp"
#include "fraclab/sphere.hpp"

namespace fraclab {

/// exp(-1/(1 - t^2)) on (-1, 1).
inline double standard_bump(double t) {
  const double q = 1.0 - t * t;
  return q > 0.0 ? std::exp(-1.0 / q) : 0.0;
}

/// Two radial sources: phi_1 = eps^{-n} phi(|x|/eps) on B_eps and
/// phi_2 = eps^{-1} phi((|x| - rho0)/eps) on the annulus of width 2 eps around |x| = rho0.
struct MollifierPair {
  double epsilon = 0.05;
  double rho0 = 0.5;
  std::function<double(double)> phi = standard_bump;

  static MollifierPair defaults(const ProblemGeometry& g) { return {0.05 * g.rho, 0.5 * g.rho, standard_bump}; }

  void validate(const ProblemGeometry& g) const {
    if (!phi) throw ConfigurationError("mollifier profile is empty");
    if (!(rho0 > 0.0 && rho0 < g.rho)) throw ConfigurationError("rho0 must lie in (0, rho)");
    if (!(epsilon > 0.0 && epsilon < 0.5 * std::min(rho0, g.rho - rho0)))
      throw ConfigurationError("epsilon must satisfy 0 < eps < min(rho0, rho - rho0)/2");
    bool nonzero = false;
    for (int k = -16; k <= 16; ++k) {
      const double t = k / 17.0;
      const double v = phi(t);
      if (v < 0.0 || std::abs(v - phi(-t)) > 1e-14 * std::max(1.0, std::abs(v)))
        throw ConfigurationError("mollifier profile must be even and nonnegative");
      nonzero = nonzero || v > 0.0;
    }
    if (!nonzero) throw ConfigurationError("mollifier profile vanishes identically");
    if (phi(1.0) != 0.0 || phi(-1.0) != 0.0) throw ConfigurationError("mollifier profile must vanish at +-1");
  }

  double peak1(int n) const { return std::pow(epsilon, -n) * phi(0.0); }
};

inline std::pair<SourceTerm, SourceTerm> build_sources(const MollifierPair& p, const ProblemGeometry& g) {
  g.validate();
  p.validate(g);
  const double eps = p.epsilon, rho0 = p.rho0;
  const double scale1 = std::pow(eps, -g.n);
  auto phi = p.phi;
  SourceTerm f1 = SourceTerm::radial([phi, eps, scale1](double r) { return scale1 * phi(r / eps); }, 0.0, eps);
  SourceTerm f2 =
      SourceTerm::radial([phi, eps, rho0](double r) { return phi((r - rho0) / eps) / eps; }, rho0 - eps, rho0 + eps);
  return {f1, f2};
}

/// int_{S^{n-1}} |rho e - t w|^{-n} dH_w with e = e_1.
inline double boundary_poisson_average(const ProblemGeometry& g, double t, int degree) {
  double acc = 0.0;
  const Vec3 pole{g.rho, 0, 0};
  for (const auto& node : sphere_quadrature(g.n, degree)) acc += node.weight * std::pow(distance(pole, t * node.point), -g.n);
  return acc;
}

struct QuotientConstants {
  double c1_eps = 0.0;
  double c2_eps = 0.0;
  double c1 = 0.0;
  double c2 = 0.0;
};

/// c_{j,eps} = int a0(y, e) phi_j(y) dy and their eps -> 0 limits. a0 carries the
/// Green normalization kappa so that c_{j,eps} is the boundary quotient of u_j.
inline QuotientConstants quotient_constants(const MollifierPair& p, const ProblemGeometry& g, const QuadratureSpec& q = {}) {
  g.validate();
  p.validate(g);
  const int n = g.n;
  const double s = g.s, rho = g.rho, rho2 = rho * rho, eps = p.epsilon;
  const int degree = std::max(q.sphere_degree, 64);
  const double pref = green_kappa(n, s) * std::pow(2.0, s) / (s * std::pow(rho, s));
  auto radial_part = [&](double t) { return std::pow(t, n - 1) * std::pow(rho2 - t * t, s) * boundary_poisson_average(g, t, degree); };
  QuotientConstants c;
  c.c1_eps = pref * integrate_adaptive([&](double w) { return p.phi(w) * std::pow(eps, 1 - n) * radial_part(eps * w); }, 0.0, 1.0, q).value;
  c.c2_eps = pref * integrate_adaptive([&](double tau) { return p.phi(tau) * radial_part(p.rho0 + eps * tau); }, -1.0, 1.0, q).value;
  const double ball_mass = sphere_area(n) * integrate_adaptive([&](double w) { return p.phi(w) * std::pow(w, n - 1); }, 0.0, 1.0, q).value;
  const double line_mass = integrate_adaptive(p.phi, -1.0, 1.0, q).value;
  c.c1 = pref * std::pow(rho, 2.0 * s - n) * ball_mass;
  c.c2 = pref * radial_part(p.rho0) * line_mass;
  return c;
}

struct ResidualSample {
  double r = 0.0;
  double Lu = 0.0;
  double Vu = 0.0;  // V_eps u_eps = c2 phi_1 - c1 phi_2
  double residual = 0.0;
};

struct CounterexampleResult {
  ProblemGeometry geometry;
  MollifierPair pair;
  std::vector<double> eps_tried;
  QuotientConstants c;
  RadialProfile u1, u2, u;
  SampledField u_eps;
  SampledField V_eps;
  BoundaryQuotient quotient;
  double quotient_scale = 0.0;  // extrapolated boundary quotient of u_1
  double suppo1_margin = 0.0;
  double suppo2_margin = 0.0;
  std::vector<ResidualSample> residual_samples;
  double residual = 0.0;
  std::vector<ResidualSample> off_support_samples;  // Vu = 0 there
  double off_support_residual = 0.0;
  int boundary_sign = 0;  // sign of u on rho - 0.05 rho < |x| < rho, 0 if it changes
  std::vector<std::string> notes;

  bool c_bracketed() const {
    return c.c1_eps > 0.5 * c.c1 && c.c1_eps < 2.0 * c.c1 && c.c2_eps > 0.5 * c.c2 && c.c2_eps < 2.0 * c.c2;
  }
};

struct CounterexampleOptions {
  int retries = 4;
  int grid_radii = 128;
  int grid_sphere_degree = 8;
  int residual_points = 10;
  double interp_tol = 1e-9;
};

namespace detail {

/// min over 65 radii of the closed support of sign(u(mid)) u(r); negative when u changes sign.
inline double sign_margin(const RadialProfile& u, double lo, double hi, double mid) {
  const double sign = u(mid) >= 0.0 ? 1.0 : -1.0;
  double m = std::numeric_limits<double>::infinity();
  for (int k = 0; k <= 64; ++k) m = std::min(m, sign * u(lo + (hi - lo) * k / 64.0));
  return m;
}

}  // namespace detail

/// u_eps = c2 u_1 - c1 u_2 with V_eps u_eps = c2 phi_1 - c1 phi_2 on the supports.
/// eps is halved (at most opt.retries times) until u_eps keeps one sign on each support.
inline CounterexampleResult build_counterexample(MollifierPair pair, const ProblemGeometry& g, const QuadratureSpec& q = {},
                                                 const CounterexampleOptions& opt = {}) {
  g.validate();
  pair.validate(g);
  CounterexampleResult res;
  res.geometry = g;
  for (int attempt = 0;; ++attempt) {
    res.eps_tried.push_back(pair.epsilon);
    const auto [f1, f2] = build_sources(pair, g);
    res.c = quotient_constants(pair, g, q);
    res.u1 = solve_radial(f1, g, q, opt.interp_tol);
    res.u2 = solve_radial(f2, g, q, opt.interp_tol);
    res.u = RadialProfile::combine(res.c.c2_eps, res.u1, -res.c.c1_eps, res.u2, opt.interp_tol);
    res.suppo1_margin = detail::sign_margin(res.u, 0.0, pair.epsilon, 0.0);
    res.suppo2_margin = detail::sign_margin(res.u, pair.rho0 - pair.epsilon, pair.rho0 + pair.epsilon, pair.rho0);
    if (res.suppo1_margin > 0.0 && res.suppo2_margin > 0.0) break;
    if (attempt == opt.retries)
      throw ConstructionError("counterexample: u_eps vanishes on a source support for every eps tried", res.eps_tried);
    pair.epsilon *= 0.5;
  }
  res.pair = pair;
  const auto [f1, f2] = build_sources(pair, g);
  const double c1 = res.c.c1_eps, c2 = res.c.c2_eps;

  const Vec3 e{g.rho, 0, 0};
  res.quotient = boundary_quotient([&](const Vec3& x) { return res.u.at(x); }, e, g, default_deltas(g.rho));
  res.quotient_scale = boundary_quotient([&](const Vec3& x) { return res.u1.at(x); }, e, g, default_deltas(g.rho)).extrapolated;

  // sampled u_eps and V_eps
  res.u_eps.geometry = res.V_eps.geometry = g;
  res.u_eps.radii = res.V_eps.radii = chebyshev_radial_grid(g.rho, opt.grid_radii);
  res.u_eps.sphere = res.V_eps.sphere = sphere_quadrature(g.n, opt.grid_sphere_degree);
  res.u_eps.provenance = "c2 u1 - c1 u2, radial profiles";
  res.V_eps.provenance = "(c2 phi1 - c1 phi2) / u_eps on the source supports, 0 elsewhere";
  int sign = 0;
  bool mixed = false;
  for (double r : res.u_eps.radii) {
    const double u = res.u(r);
    const Vec3 x{r, 0, 0};
    const double src = c2 * f1(x) - c1 * f2(x);
    const double v = src != 0.0 && u != 0.0 ? src / u : 0.0;
    res.u_eps.values.emplace_back(res.u_eps.sphere.size(), u);
    res.V_eps.values.emplace_back(res.V_eps.sphere.size(), v);
    if (r > 0.95 * g.rho) {
      const int sg = u > 0.0 ? 1 : (u < 0.0 ? -1 : 0);
      if (sign == 0 && !mixed) sign = sg;
      if (sg != sign) mixed = true;
    }
  }
  res.boundary_sign = mixed ? 0 : sign;
  res.u_eps.validate();
  res.V_eps.validate();

  // residual of (-Delta)^s u_eps = V_eps u_eps on both supports
  const auto kernel = AnisoKernel::fractional_laplacian(g.n, g.s);
  const EvaluableFunction uf = res.u.as_function();
  QuadratureSpec lq = q;
  lq.rel_tol = std::max(q.rel_tol, 1e-7);
  lq.abs_tol = std::max(q.abs_tol, 1e-9);
  std::vector<double> radii;
  const int m = opt.residual_points;
  for (int k = 0; k < m; ++k) radii.push_back(0.9 * pair.epsilon * k / (m - 1));
  for (int k = 0; k < m; ++k) radii.push_back(pair.rho0 + 0.9 * pair.epsilon * (-1.0 + 2.0 * k / (m - 1)));
  res.residual_samples = parallel_map<ResidualSample>(radii.size(), [&](std::size_t i) {
    const Vec3 x{radii[i], 0, 0};
    ResidualSample smp;
    smp.r = radii[i];
    smp.Lu = eval_L(uf, x, kernel, g.s, lq).value;
    smp.Vu = c2 * f1(x) - c1 * f2(x);
    smp.residual = std::abs(smp.Lu - smp.Vu);
    return smp;
  });
  for (const auto& smp : res.residual_samples) res.residual = std::max(res.residual, smp.residual);

  // (-Delta)^s u_eps vanishes between and beyond the supports
  std::vector<double> free_radii;
  const double gap_lo = pair.epsilon, gap_hi = pair.rho0 - pair.epsilon;
  const double out_lo = pair.rho0 + pair.epsilon, out_hi = g.rho;
  for (double t : {0.25, 0.5, 0.75}) free_radii.push_back(gap_lo + t * (gap_hi - gap_lo));
  for (double t : {0.25, 0.5}) free_radii.push_back(out_lo + t * (out_hi - out_lo));
  res.off_support_samples = parallel_map<ResidualSample>(free_radii.size(), [&](std::size_t i) {
    ResidualSample smp;
    smp.r = free_radii[i];
    smp.Lu = eval_L(uf, Vec3{smp.r, 0, 0}, kernel, g.s, lq).value;
    smp.residual = std::abs(smp.Lu);
    return smp;
  });
  for (const auto& smp : res.off_support_samples) res.off_support_residual = std::max(res.off_support_residual, smp.residual);

  if (g.n == 1 && g.s > 0.5) {
    const double g00 = green_kappa(1, g.s) * std::pow(g.rho, 2.0 * g.s - 1.0) / (g.s - 0.5);
    res.notes.push_back("n < 2s: the ball Green function is finite on the diagonal, G(0,0) = " + std::to_string(g00) +
                        " > 0; the sign of u_eps on the central support is established numerically only");
  }
  if (res.eps_tried.size() > 1) res.notes.push_back("epsilon was halved to keep u_eps one-signed on the supports");
  return res;
}

struct SphereInequality {
  int n = 0;
  double s = 0.0;
  double lhs = 0.0;          // int_{S^{n-1}} |e - w|^{2s-n} dH_w by quadrature
  double closed_form = 0.0;  // same integral in closed form
  double rhs = 0.0;          // H^{n-1}(S^{n-1})
  double margin() const { return lhs - rhs; }
};

/// n = 2, 3 and s in (1/2, 1). Polar reduction about e: |e - w| = 2 sin(theta/2).
inline SphereInequality sphere_inequality(int n, double s, const QuadratureSpec& q = {}) {
  if (n != 2 && n != 3) throw UnsupportedError("sphere_inequality: n must be 2 or 3");
  if (!(s > 0.5 && s < 1.0)) throw ConfigurationError("sphere_inequality: s must lie in (1/2, 1)");
  const double alpha = 2.0 * s - n;
  SphereInequality out;
  out.n = n;
  out.s = s;
  out.rhs = sphere_area(n);
  QuadratureSpec tight = q;
  tight.rel_tol = std::min(q.rel_tol, 1e-12);
  // polar angle theta about e, |e - w| = 2 sin(theta/2); theta = v^m with
  // m = 1/(2s - 1) removes the theta^{2s-2} endpoint behaviour
  const double m = 1.0 / (2.0 * s - 1.0);
  const double ring = n == 3 ? 2.0 * std::numbers::pi : 2.0;
  auto polar = [&](double th) { return ring * std::pow(2.0 * std::sin(0.5 * th), alpha) * (n == 3 ? std::sin(th) : 1.0); };
  auto f = [&](double v) {
    const double th = std::pow(v, m);
    return polar(th) * m * std::pow(v, m - 1.0);
  };
  out.lhs = integrate_adaptive(f, 0.0, std::pow(std::numbers::pi, 1.0 / m), tight).value;
  if (n == 3) {
    out.closed_form = std::pow(2.0, 2.0 * s) * std::numbers::pi / (2.0 * s - 1.0);
  } else {
    out.closed_form = std::pow(2.0, alpha + 1.0) * std::sqrt(std::numbers::pi) * std::tgamma(0.5 * (alpha + 1.0)) /
                      std::tgamma(0.5 * alpha + 1.0);
  }
  return out;
}

/// One-dimensional analogue: the two-point sphere gives 2^{2s-1} against 2.
struct PointSphereIdentity {
  double s = 0.0;
  double lhs = 0.0;
  double rhs = 2.0;
  bool equal() const { return lhs == rhs; }
};

inline PointSphereIdentity point_sphere_identity(double s) {
  if (!(s > 0.5 && s < 1.0)) throw ConfigurationError("point_sphere_identity: s must lie in (1/2, 1)");
  return {s, std::pow(2.0, 2.0 * s - 1.0), 2.0};
}

struct FSigmaReport {
  int n = 0;
  double s = 0.0;
  double argmin = 0.0;
  double f_at_one = 0.0;
  double f_at_one_expected = 0.0;
  bool decreasing_below_one = false;
  bool increasing_above_one = false;
  double f_small = 0.0;  // F at the smallest grid sigma
  double f_large = 0.0;  // F at the largest grid sigma
  int pairs = 0;
  double worst_slack = 0.0;          // min relative slack of the power inequality
  int tight_pairs = 0;               // relative slack <= 1e-12
  int tight_pairs_with_a_ne_b = 0;   // of those, |a - b| > 1e-12
};

inline double f_sigma(double sigma, int n, double s) {
  const double p = 2.0 * s - n;
  return (1.0 + std::pow(sigma, p)) / std::pow(1.0 + sigma, p);
}

/// F(sigma) = (1 + sigma^{2s-n}) / (1 + sigma)^{2s-n} on sigma = 2^{k/64}, |k| <= 1280,
/// and a^{2s-n} + b^{2s-n} >= 2^{n+1-2s} (a+b)^{2s-n} on random pairs plus equal pairs.
inline FSigmaReport f_sigma_check(int n, double s, int random_pairs = 1000, std::uint64_t seed = 42) {
  if (!(2.0 * s < n)) throw ConfigurationError("f_sigma_check needs 2s < n");
  if (!(s > 0.0 && s < 1.0)) throw ConfigurationError("f_sigma_check: s must lie in (0,1)");
  FSigmaReport rep;
  rep.n = n;
  rep.s = s;
  const int K = 1280;
  std::vector<double> sig, val;
  for (int k = -K; k <= K; ++k) {
    sig.push_back(std::exp2(k / 64.0));
    val.push_back(f_sigma(sig.back(), n, s));
  }
  const auto it = std::min_element(val.begin(), val.end());
  rep.argmin = sig[static_cast<std::size_t>(it - val.begin())];
  rep.f_at_one = f_sigma(1.0, n, s);
  rep.f_at_one_expected = std::pow(2.0, n + 1.0 - 2.0 * s);
  rep.decreasing_below_one = rep.increasing_above_one = true;
  for (std::size_t i = 1; i < sig.size(); ++i) {
    if (sig[i] <= 1.0 && !(val[i] < val[i - 1])) rep.decreasing_below_one = false;
    if (sig[i - 1] >= 1.0 && !(val[i] > val[i - 1])) rep.increasing_above_one = false;
  }
  rep.f_small = val.front();
  rep.f_large = val.back();

  const double p = 2.0 * s - n;
  const double c = rep.f_at_one_expected;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.01, 10.0);
  rep.worst_slack = std::numeric_limits<double>::infinity();
  auto check = [&](double a, double b) {
    const double lhs = std::pow(a, p) + std::pow(b, p);
    const double rhs = c * std::pow(a + b, p);
    const double slack = (lhs - rhs) / rhs;
    rep.worst_slack = std::min(rep.worst_slack, slack);
    if (std::abs(slack) <= 1e-12) {
      ++rep.tight_pairs;
      if (std::abs(a - b) > 1e-12) ++rep.tight_pairs_with_a_ne_b;
    }
    ++rep.pairs;
  };
  for (int i = 0; i < random_pairs; ++i) {
    const double a = u(rng), b = u(rng);
    check(a, b);
  }
  for (double a : {0.5, 1.0, 3.0}) check(a, a);
  return rep;
}

struct UnboundedVRow {
  double delta = 0.0;
  double u = 0.0;
  double Lu = 0.0;
  double V = 0.0;
  bool dropped = false;  // u == 0, V undefined
};

struct UnboundedVCase {
  std::string profile;
  double exponent = 0.0;  // u0(t) = (rho^2 - t^2)_+^exponent
  std::vector<UnboundedVRow> rows;
  double slope = 0.0;      // least-squares slope of log|V| against log delta
  double sup_growth = 0.0; // max |V| over the sweep / |V| at the first delta
};

struct UnboundedVReport {
  ProblemGeometry geometry;
  UnboundedVCase control;  // exponent s: torsion profile
  UnboundedVCase fast;     // decays faster than d^s
  bool fast_blows_up_faster() const { return fast.slope < control.slope; }
};

/// V = (-Delta)^s u / u along x = (rho - delta) e_1 for two radial profiles.
inline UnboundedVReport unbounded_v_example(const ProblemGeometry& g, double fast_exponent = -1.0,
                                            std::vector<double> deltas = {}, const QuadratureSpec& q = {}) {
  g.validate();
  if (fast_exponent <= 0.0) fast_exponent = 3.0 * g.s;
  if (!(fast_exponent > g.s)) throw ConfigurationError("unbounded_v: the fast profile must decay faster than d^s");
  if (deltas.empty())
    for (int k = 0; k < 8; ++k) deltas.push_back(0.1 * g.rho * std::ldexp(1.0, -k));
  const auto kernel = AnisoKernel::fractional_laplacian(g.n, g.s);
  auto run = [&](const std::string& name, double p) {
    UnboundedVCase c;
    c.profile = name;
    c.exponent = p;
    const EvaluableFunction u = torsion_profile(p, g.rho);
    c.rows = parallel_map<UnboundedVRow>(deltas.size(), [&](std::size_t i) {
      UnboundedVRow row;
      row.delta = deltas[i];
      const Vec3 x{g.rho - deltas[i], 0, 0};
      row.u = u(x);
      row.Lu = eval_L(u, x, kernel, g.s, q).value;
      if (row.u == 0.0) {
        row.dropped = true;
      } else {
        row.V = row.Lu / row.u;
      }
      return row;
    });
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int m = 0;
    double first = 0.0, sup = 0.0;
    for (const auto& row : c.rows) {
      if (row.dropped || row.V == 0.0) continue;
      const double lx = std::log(row.delta), ly = std::log(std::abs(row.V));
      sx += lx;
      sy += ly;
      sxx += lx * lx;
      sxy += lx * ly;
      ++m;
      if (first == 0.0) first = std::abs(row.V);
      sup = std::max(sup, std::abs(row.V));
    }
    if (m >= 2) c.slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    c.sup_growth = first > 0.0 ? sup / first : 0.0;
    return c;
  };
  UnboundedVReport rep;
  rep.geometry = g;
  rep.control = run("torsion", g.s);
  rep.fast = run("fast-decay", fast_exponent);
  return rep;
}

}  // namespace fraclab
