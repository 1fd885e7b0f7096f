#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "fraclab/errors.hpp"
#include "fraclab/quadrature.hpp"
#include "fraclab/specialfn.hpp"
#include "fraclab/sphere.hpp"
#include "fraclab/vec.hpp"

namespace fraclab {

struct FracOrder {
  double value;

  FracOrder(double s) : value(s) {  // NOLINT: implicit on purpose
    if (!(s > 0.0 && s < 1.0)) throw DomainError("fractional order s must lie in (0,1)");
  }
  operator double() const { return value; }  // NOLINT
};

/// C(n,s) = 4^s Gamma(n/2+s) / (pi^{n/2} |Gamma(-s)|): the constant density
/// for which L is the fractional Laplacian with symbol |xi|^{2s}.
inline double fractional_laplacian_constant(int n, double s) {
  return s * std::pow(4.0, s) * std::tgamma(0.5 * n + s) / (std::pow(std::numbers::pi, 0.5 * n) * std::tgamma(1.0 - s));
}

/// Even angular density a on S^{n-1} with lambda <= a <= Lambda.
struct AnisoKernel {
  std::function<double(const Vec3&)> a;
  double lambda = 1.0;
  double Lambda = 1.0;
  int n = 1;

  static AnisoKernel fractional_laplacian(int n, double s) {
    const double c = fractional_laplacian_constant(n, s);
    return {[c](const Vec3&) { return c; }, c, c, n};
  }

  /// Lambda * (3/4 + cos(2 theta)/4) with theta the angle to e1; spans [Lambda/2, Lambda] for n >= 2.
  static AnisoKernel two_level(int n, double Lambda) {
    return {[Lambda](const Vec3& w) { return Lambda * (0.5 + 0.5 * w[0] * w[0]); }, 0.5 * Lambda, Lambda, n};
  }

  /// Checks ellipticity and evenness on the nodes of the sphere rule of the given degree.
  void validate(int degree = 24) const {
    if (!a) throw ConfigurationError("kernel density is empty");
    if (!(lambda > 0.0) || !(Lambda >= lambda)) throw ConfigurationError("kernel bounds must satisfy 0 < lambda <= Lambda");
    for (const auto& node : sphere_quadrature(n, degree)) {
      const double v = a(node.point);
      const double vm = a(-node.point);
      if (std::abs(v - vm) > 1e-12 * std::max(1.0, std::abs(v)))
        throw ConfigurationError("kernel density is not even: a(w) != a(-w)");
      if (v < lambda * (1 - 1e-12) || v > Lambda * (1 + 1e-12))
        throw ConfigurationError("kernel density violates lambda <= a <= Lambda");
    }
  }
};

struct BallRegion {
  Vec3 center{0.0, 0.0, 0.0};
  double radius = std::numeric_limits<double>::infinity();

  bool contains(const Vec3& p) const { return distance(p, center) < radius; }
};

/// Exterior growth bound |f(y)| <= c_bar (1 + |y - x0|^{2s - delta}); the
/// lemma's version bounds only the negative part. `radius` is the R of the
/// ball B_R(x0) on which the function is known to be nonnegative.
struct GrowthCertificate {
  double c_bar = std::numeric_limits<double>::min();
  double delta = 1.0;
  Vec3 x0{0.0, 0.0, 0.0};
  double radius = 1.0;

  void validate(double s) const {
    if (!(c_bar > 0.0)) throw ConfigurationError("growth certificate needs c_bar > 0");
    if (!(delta > 0.0 && delta < 2.0 * s)) throw ConfigurationError("growth certificate needs delta in (0, 2s)");
    if (!(radius > 0.0)) throw ConfigurationError("growth certificate needs R > 0");
  }
};

/// A function handle together with what eval_L needs to integrate it safely:
/// where it is C^2, where it has kinks, how it grows and where it vanishes.
struct EvaluableFunction {
  std::function<double(const Vec3&)> values;
  BallRegion smooth;
  std::optional<GrowthCertificate> growth;
  std::optional<BallRegion> support;
  std::vector<BallRegion> kinks;

  double operator()(const Vec3& y) const {
    if (support && !support->contains(y)) return 0.0;
    return values(y);
  }
};

/// (rho^2 - |y - c|^2)_+^s scaled by `scale`, with its kink and support on the sphere.
inline EvaluableFunction torsion_profile(double s, double rho = 1.0, Vec3 center = {0, 0, 0}, double scale = 1.0) {
  EvaluableFunction f;
  f.values = [=](const Vec3& y) {
    const double q = rho * rho - norm2(y - center);
    return q > 0.0 ? scale * std::pow(q, s) : 0.0;
  };
  f.smooth = {center, rho};
  f.support = BallRegion{center, rho};
  f.kinks = {BallRegion{center, rho}};
  return f;
}

/// Constant c on R^n; bounded, so any delta < 2s certifies it (delta = s is used).
inline EvaluableFunction constant_function(double c, double s) {
  EvaluableFunction f;
  f.values = [c](const Vec3&) { return c; };
  GrowthCertificate g;
  g.c_bar = std::max(std::abs(c), std::numeric_limits<double>::min());
  g.delta = s;
  f.growth = g;
  return f;
}

struct EvalResult {
  double value = 0.0;
  double error = 0.0;
};

namespace detail {

struct RayOutcome {
  double value = 0.0;
  double error = 0.0;
  double l1 = 0.0;
};

inline void add(RayOutcome& acc, const QuadResult& r, double l1) {
  acc.value += r.value;
  acc.error += r.error;
  acc.l1 += l1;
}

// int_0^inf (2f(x) - f(x+tw) - f(x-tw)) t^{-1-2s} dt along one direction.
inline RayOutcome ray_integral(const EvaluableFunction& f, const Vec3& x, double fx, const Vec3& w, double s,
                               double delta_in, const QuadratureSpec& q, double& tail_bound_out) {
  RayOutcome out;
  auto D = [&](double t) { return 2.0 * fx - f(x + t * w) - f(x - t * w); };

  // Inner part: t = delta sigma^p with p = 1/(1-s) turns D(t) ~ t^2 into a smooth integrand in sigma.
  const double p = 1.0 / (1.0 - s);
  const double t_floor = 1e-3 * delta_in;
  const double d_floor = D(t_floor);
  auto inner = [&](double sigma) {
    if (sigma <= 0.0) return 0.0;
    const double t = delta_in * std::pow(sigma, p);
    const double d = t < t_floor ? d_floor * (t / t_floor) * (t / t_floor) : D(t);
    return d * std::pow(delta_in, -2.0 * s) * p * std::pow(sigma, -2.0 * p * s - 1.0);
  };
  const QuadResult in = integrate_adaptive(inner, 0.0, 1.0, q, false);
  add(out, in, std::abs(in.value));

  // Outer part, split where either half-ray crosses a kink or the support boundary.
  std::vector<double> cuts{delta_in};
  double t_end = std::numeric_limits<double>::infinity();
  auto crossings = [&](const BallRegion& b, bool is_support) {
    double exit_max = 0.0;
    for (const Vec3& dir : {w, -w}) {
      double lo = 0.0, hi = 0.0;
      if (!ray_sphere(x, dir, b.center, b.radius, lo, hi)) continue;
      for (double t : {lo, hi})
        if (t > delta_in) cuts.push_back(t);
      exit_max = std::max(exit_max, hi);
    }
    if (is_support) t_end = std::max(delta_in, exit_max);
  };
  for (const auto& k : f.kinks) crossings(k, false);
  if (f.support) crossings(*f.support, true);

  auto outer = [&](double t) { return D(t) * std::pow(t, -1.0 - 2.0 * s); };
  auto segment = [&](double a, double b) {
    if (!(b > a)) return;
    if (b - a <= 1e-10 * b) {
      // too short for tanh-sinh abscissas to separate from the endpoints; the integrand is bounded here
      const double v = outer(0.5 * (a + b)) * (b - a);
      add(out, {v, std::abs(v), 0}, std::abs(v));
      return;
    }
    const QuadResult r = integrate_endpoint_singular(outer, a, b, q, false);
    add(out, r, std::abs(r.value) + r.error);
  };

  if (f.support) {
    std::sort(cuts.begin(), cuts.end());
    double prev = delta_in;
    for (double c : cuts) {
      if (c > t_end) break;
      segment(prev, c);
      prev = std::max(prev, c);
    }
    segment(prev, t_end);
    // beyond t_end both f(x + tw) and f(x - tw) vanish
    const double tail = fx * std::pow(t_end, -2.0 * s) / s;
    out.value += tail;
    out.l1 += std::abs(tail);
    tail_bound_out = 0.0;
    return out;
  }

  if (!f.growth) throw ConfigurationError("eval_L: a function without support needs a growth certificate");
  const GrowthCertificate& g = *f.growth;
  const double c0 = distance(x, g.x0);
  double t = std::max({1.0, c0, delta_in});
  std::sort(cuts.begin(), cuts.end());
  for (double c : cuts) t = std::max(t, c);
  {
    double prev = delta_in;
    for (double c : cuts) {
      segment(prev, c);
      prev = std::max(prev, c);
    }
    segment(prev, t);
  }
  auto bound = [&](double T) {
    return 2.0 * g.c_bar *
           (std::pow(T, -2.0 * s) / (2.0 * s) + std::pow(2.0, 2.0 * s - g.delta) * std::pow(T, -g.delta) / g.delta);
  };
  const double target = std::max(q.abs_tol, q.rel_tol * out.l1);
  int doublings = 0;
  while (bound(t) > target) {
    if (++doublings > 200) break;
    segment(t, 2.0 * t);
    t *= 2.0;
  }
  // the constant part 2 f(x) is integrated exactly; only f(x +- tw) is bounded
  const double tail = fx * std::pow(t, -2.0 * s) / s;
  out.value += tail;
  out.l1 += std::abs(tail);
  tail_bound_out = bound(t);
  return out;
}

}  // namespace detail

/// Lf(x) = PV int (f(x) - f(x+y)) |y|^{-n-2s} a(y/|y|) dy.
///
/// Inside the support of f the integral is taken along rays in symmetrized
/// form, (1/2) int (2f(x) - f(x+y) - f(x-y)) ..., over half of the sphere rule.
/// Outside the support the integral is not singular and is computed directly
/// in polar coordinates about the support centre.
inline EvalResult eval_L(const EvaluableFunction& f, const Vec3& x, const AnisoKernel& kernel, FracOrder s_order,
                         const QuadratureSpec& q = {}) {
  const double s = s_order;
  q.validate();
  if (!f.values) throw ConfigurationError("eval_L: empty function");
  if (f.growth) f.growth->validate(s);
  const int n = kernel.n;

  if (f.support && !f.support->contains(x)) {
    const BallRegion& sup = *f.support;
    const auto nodes = sphere_quadrature(n, q.sphere_degree);
    auto shell = [&](double r) {
      double acc = 0.0;
      for (const auto& nd : nodes) {
        const Vec3 y = sup.center + r * nd.point;
        const Vec3 d = y - x;
        const double len = norm(d);
        acc += nd.weight * f(y) * kernel.a((1.0 / len) * d) * std::pow(len, -n - 2.0 * s);
      }
      return -acc * std::pow(r, n - 1);
    };
    const QuadResult r = integrate_adaptive(shell, 0.0, sup.radius, q, false);
    if (r.error > 1e3 * std::max(q.abs_tol, q.rel_tol * std::abs(r.value)))
      throw AccuracyError("eval_L: far-field quadrature did not converge", r.value, r.error);
    return {r.value, r.error};
  }

  if (!f.smooth.contains(x)) throw DomainError("eval_L: x lies outside the smoothness ball of f");
  const double to_edge = f.smooth.radius - distance(x, f.smooth.center);
  const double delta_in = std::min(0.1, 0.5 * to_edge);
  const double fx = f(x);
  double value = 0.0, error = 0.0, l1 = 0.0, tail = 0.0;
  for (const auto& node : half_sphere_rule(n, q.sphere_degree)) {
    double tail_w = 0.0;
    const detail::RayOutcome g = detail::ray_integral(f, x, fx, node.point, s, delta_in, q, tail_w);
    const double w = 0.5 * node.weight * kernel.a(node.point);
    value += w * g.value;
    error += w * g.error;
    l1 += w * g.l1;
    tail += w * tail_w;
  }
  const double target = std::max(q.abs_tol, q.rel_tol * l1);
  if (tail > 1e3 * target)
    throw AccuracyError("eval_L: certified tail bound exceeds tolerance", value, error + tail);
  if (error > 1e3 * target) throw AccuracyError("eval_L: ray quadrature did not converge", value, error + tail);
  return {value, error + tail};
}

/// C_tilde (d0^{-2s} + d0^{-delta}) bound for -L f^-(x) at points whose
/// distance to the complement of the nonnegativity ball B_R(x0) is at least d0:
/// 2^{2s} c_bar Lambda |S^{n-1}| [(1 + R^{2s-delta}) d0^{-2s}/(2s) + d0^{-delta}/delta].
inline double tail_bound(const GrowthCertificate& g, double d0, const AnisoKernel& kernel, FracOrder s_order) {
  const double s = s_order;
  if (!(d0 > 0.0)) throw DomainError("tail_bound: d0 must be positive");
  g.validate(s);
  const double p = 2.0 * s - g.delta;
  return std::pow(2.0, 2.0 * s) * g.c_bar * kernel.Lambda * sphere_area(kernel.n) *
         ((1.0 + std::pow(g.radius, p)) * std::pow(d0, -2.0 * s) / (2.0 * s) + std::pow(d0, -g.delta) / g.delta);
}

inline double tail_bound(const EvaluableFunction& f, const Vec3& x, double d0, const AnisoKernel& kernel, FracOrder s) {
  if (!f.growth) throw ConfigurationError("tail_bound: function carries no growth certificate");
  if (distance(x, f.growth->x0) + d0 > f.growth->radius * (1 + 1e-12))
    throw DomainError("tail_bound: x must lie at distance >= d0 inside B_R(x0)");
  return tail_bound(*f.growth, d0, kernel, s);
}

/// -L f^-(x) = int f^-(x+y) |y|^{-n-2s} a dy computed directly, for f >= 0 near x.
/// The negative part must vanish on B_{d0}(x); integration runs over |y| >= d0.
inline EvalResult negative_part_term(const EvaluableFunction& f, const Vec3& x, double d0, const AnisoKernel& kernel,
                                     FracOrder s_order, const QuadratureSpec& q = {}) {
  const double s = s_order;
  const int n = kernel.n;
  double value = 0.0, error = 0.0;
  for (const auto& node : sphere_quadrature(n, q.sphere_degree)) {
    auto along = [&](double t) {
      const double v = f(x + t * node.point);
      return v < 0.0 ? -v * std::pow(t, -1.0 - 2.0 * s) : 0.0;
    };
    std::vector<double> cuts{d0};
    double t_end = std::numeric_limits<double>::infinity();
    for (const auto& k : f.kinks) {
      double lo, hi;
      if (ray_sphere(x, node.point, k.center, k.radius, lo, hi))
        for (double t : {lo, hi})
          if (t > d0) cuts.push_back(t);
    }
    if (f.support) {
      double lo, hi;
      t_end = ray_sphere(x, node.point, f.support->center, f.support->radius, lo, hi) ? std::max(hi, d0) : d0;
    } else {
      throw UnsupportedError("negative_part_term: the direct value needs a compactly supported function");
    }
    std::sort(cuts.begin(), cuts.end());
    double prev = d0, acc = 0.0;
    for (double c : cuts) {
      if (c >= t_end) break;
      const QuadResult r = integrate_adaptive(along, prev, c, q, false);
      acc += r.value;
      error += node.weight * kernel.a(node.point) * r.error;
      prev = c;
    }
    const QuadResult r = integrate_adaptive(along, prev, t_end, q, false);
    acc += r.value;
    error += node.weight * kernel.a(node.point) * r.error;
    value += node.weight * kernel.a(node.point) * acc;
  }
  return {value, error};
}

}  // namespace fraclab
