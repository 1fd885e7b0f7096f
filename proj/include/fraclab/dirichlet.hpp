#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "fraclab/errors.hpp"
#include "fraclab/greenball.hpp"
#include "fraclab/operator.hpp"
#include "fraclab/parallel.hpp"
#include "fraclab/quadrature.hpp"
#include "fraclab/sphere.hpp"
#include "fraclab/vec.hpp"

namespace fraclab {

/// Right-hand side f of (-Delta)^s u = f in B_rho, supported in the closed
/// annulus r_inner <= |y| <= r_outer (a ball when r_inner = 0).
struct SourceTerm {
  enum class Kind { radial, general };

  Kind kind = Kind::radial;
  std::function<double(double)> profile;        // radial: f(y) = profile(|y|)
  std::function<double(const Vec3&)> callable;  // general
  double r_inner = 0.0;
  double r_outer = 0.0;

  static SourceTerm radial(std::function<double(double)> fn, double r_in, double r_out) {
    SourceTerm f;
    f.kind = Kind::radial;
    f.profile = std::move(fn);
    f.r_inner = r_in;
    f.r_outer = r_out;
    return f;
  }

  static SourceTerm general(std::function<double(const Vec3&)> fn, double r_in, double r_out) {
    SourceTerm f;
    f.kind = Kind::general;
    f.callable = std::move(fn);
    f.r_inner = r_in;
    f.r_outer = r_out;
    return f;
  }

  static SourceTerm constant(double c, double rho) {
    return radial([c](double) { return c; }, 0.0, rho);
  }

  bool is_radial() const { return kind == Kind::radial; }

  double operator()(const Vec3& y) const {
    const double r = norm(y);
    if (r < r_inner || r > r_outer) return 0.0;
    return is_radial() ? profile(r) : callable(y);
  }

  void validate(const ProblemGeometry& g) const {
    if (is_radial() ? !profile : !callable) throw ConfigurationError("source term has no values");
    if (!(r_inner >= 0.0) || !(r_outer > r_inner)) throw ConfigurationError("source support must be a ball or annulus");
    if (r_outer > g.rho * (1 + 1e-12)) throw ConfigurationError("source support must lie inside B_rho");
  }
};

/// Spherical average K(r,t) = int_{S^{n-1}} G(r e, t w) dH_w of the ball Green function.
///
/// n = 1 is the two-point sum; n = 3 uses the antiderivative of d^{2s-2} I(A/d^2) in
/// d = |re - tw|; n = 2 is a one-dimensional angular integral, mapped so that
/// the peak at small |r - t| is resolved.
class RadialGreenKernel {
 public:
  explicit RadialGreenKernel(BallGreen green) : g_(std::move(green)) {}

  const BallGreen& green() const { return g_; }

  double operator()(double r, double t) const { return eval(r, t, std::abs(r - t)); }

  /// `gap` must equal |r - t|; passing it separately keeps it exact near the diagonal.
  double eval(double r, double t, double gap) const {
    const ProblemGeometry& geo = g_.geometry();
    const double rho2 = geo.rho * geo.rho;
    const double A = (rho2 - r * r) * (rho2 - t * t) / rho2;
    if (A <= 0.0) return 0.0;
    gap = std::max(gap, 1e-200 * geo.rho);
    switch (geo.n) {
      case 1:
        return g_.from_distance(gap, A) + g_.from_distance(r + t, A);
      case 2:
        return planar(r, t, gap, A);
      default:
        return spatial(r, t, gap, A);
    }
  }

 private:
  double planar(double r, double t, double gap, double A) const {
    const QuadratureSpec& q = g_.quadrature();
    const double rt = r * t;
    const double a = rt > 0.0 ? gap / (2.0 * std::sqrt(rt)) : std::numeric_limits<double>::infinity();
    if (a >= 1.0) {
      auto f = [&](double phi) {
        const double sn = std::sin(phi);
        return g_.from_distance(std::sqrt(gap * gap + 4.0 * rt * sn * sn), A);
      };
      return 4.0 * integrate_adaptive(f, 0.0, 0.5 * std::numbers::pi, q, false).value;
    }
    // sin(phi) = a sinh(w): d = gap cosh(w), dphi = a cosh(w) dw / cos(phi).
    // On the last unit of w, w = W - v^2 absorbs the 1/cos(phi) endpoint singularity.
    const double W = std::asinh(1.0 / a);
    const double sinhW = 1.0 / a;
    const double L = std::min(W, 1.0);
    auto regular = [&](double w) {
      const double one_minus_sin = 2.0 * std::cosh(0.5 * (W + w)) * std::sinh(0.5 * (W - w)) / sinhW;
      const double sin_phi = std::sinh(w) / sinhW;
      const double ch = std::cosh(w);
      return g_.from_distance(gap * ch, A) * a * ch / std::sqrt(one_minus_sin * (1.0 + sin_phi));
    };
    auto tail = [&](double v) {
      const double w = W - v * v;
      const double h = 0.5 * v * v;
      const double sh = h > 1e-6 ? std::sinh(h) / (v * v) : 0.5 + h * h / 12.0;  // sinh(v^2/2) / v^2
      const double sin_phi = std::sinh(w) / sinhW;
      const double ch = std::cosh(w);
      return g_.from_distance(gap * ch, A) * a * ch * 2.0 /
             std::sqrt(2.0 * std::cosh(0.5 * (W + w)) * sh * (1.0 + sin_phi) / sinhW);
    };
    double total = integrate_adaptive(tail, 0.0, std::sqrt(L), q, false).value;
    if (W > L) total += integrate_adaptive(regular, 0.0, W - L, q, false).value;
    return 4.0 * total;
  }

  double spatial(double r, double t, double gap, double A) const {
    const ProblemGeometry& geo = g_.geometry();
    const double s = geo.s;
    const double big = std::max(r, t), small = std::min(r, t);
    if (small < 1e-4 * big) {
      // the first-order term averages out over the sphere
      const double rho2 = geo.rho * geo.rho;
      return 4.0 * std::numbers::pi * g_.from_distance(big, rho2 - big * big);
    }
    const double pref = 2.0 * std::numbers::pi * g_.kappa() / (r * t);
    if (s == 0.5) {
      auto F = [&](double d) { return -2.0 * std::asinh(std::sqrt(A) / d); };
      return pref * (F(r + t) - F(gap));
    }
    if (std::abs(2.0 * s - 1.0) < 1e-3) {
      auto f = [&](double d, double dc) {
        const double dd = dc < 0.0 ? gap - dc : d;
        return std::pow(dd, 2.0 * s - 2.0) * g_.profile()(A / (dd * dd));
      };
      return pref * integrate_endpoint_singular(f, gap, r + t, g_.quadrature(), false).value;
    }
    auto F = [&](double d) {
      return (std::pow(d, 2.0 * s - 1.0) * g_.profile()(A / (d * d)) - 2.0 * std::pow(A, s) / std::sqrt(d * d + A)) /
             (2.0 * s - 1.0);
    };
    return pref * (F(r + t) - F(gap));
  }

  BallGreen g_;
};

/// u(r) = int f(t) t^{n-1} K(r,t) dt for a radial source, split at t = r.
inline QuadResult radial_solution_value(const SourceTerm& f, double r, const RadialGreenKernel& K) {
  const ProblemGeometry& geo = K.green().geometry();
  if (r >= geo.rho) return {};
  const QuadratureSpec& q = K.green().quadrature();
  const int n = geo.n;
  const double lo = f.r_inner, hi = std::min(f.r_outer, geo.rho);
  QuadResult total;
  auto accumulate = [&](const QuadResult& part) {
    total.value += part.value;
    total.error += part.error;
  };
  // the integrand behaves like gap^{2s-1} at t = r; dropping gap < 1e-100 rho is harmless
  const double floor = 1e-100 * geo.rho;
  auto term = [&](double t, double gap) {
    if (gap < floor) return 0.0;
    const double fv = f.profile(t);
    if (fv == 0.0) return 0.0;
    return fv * (n == 1 ? 1.0 : std::pow(t, n - 1)) * K.eval(r, t, gap);
  };
  if (r > lo && r < hi) {
    auto below = [&](double t, double tc) { return term(t, tc > 0.0 ? tc : r - t); };  // tc = r - t near the right end
    auto above = [&](double t, double tc) { return term(t, tc < 0.0 ? -tc : t - r); };
    accumulate(integrate_endpoint_singular(below, lo, r, q, false));
    accumulate(integrate_endpoint_singular(above, r, hi, q, false));
  } else {
    auto whole = [&](double t) { return term(t, std::abs(r - t)); };
    accumulate(integrate_endpoint_singular(whole, lo, hi, q, false));
  }
  return total;
}

/// u(x) = int_{B_rho} G(x,y) f(y) dy along rays from x, so that the
/// singularity at y = x becomes the integrable factor t^{2s-1}.
inline QuadResult solve_at(const SourceTerm& f, const Vec3& x, const BallGreen& G) {
  const ProblemGeometry& geo = G.geometry();
  const double rho2 = geo.rho * geo.rho;
  const double qx = rho2 - norm2(x);
  if (qx <= 0.0) return {};
  if (f.is_radial()) return radial_solution_value(f, norm(x), RadialGreenKernel(G));
  const QuadratureSpec& q = G.quadrature();
  QuadResult total;
  for (const auto& node : sphere_quadrature(geo.n, q.sphere_degree)) {
    const Vec3& w = node.point;
    double t_min = 0.0, t_max = 0.0;
    ray_sphere(x, w, {0, 0, 0}, geo.rho, t_min, t_max);
    std::vector<double> cuts{0.0, t_max};
    for (double radius : {f.r_inner, f.r_outer}) {
      double a = 0.0, b = 0.0;
      if (radius > 0.0 && ray_sphere(x, w, {0, 0, 0}, radius, a, b))
        for (double c : {a, b})
          if (c > 0.0 && c < t_max) cuts.push_back(c);
    }
    std::sort(cuts.begin(), cuts.end());
    auto integrand = [&](double t) {
      if (t < 1e-100 * geo.rho) return 0.0;
      const Vec3 y = x + t * w;
      const double fy = f(y);
      if (fy == 0.0) return 0.0;
      // rho^2 - |x + tw|^2 = (t_max - t)(t - t_min)
      const double A = qx * (t_max - t) * (t - t_min) / rho2;
      return fy * G.times_distance_power(t, A);
    };
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
      const QuadResult part = integrate_endpoint_singular(integrand, cuts[k], cuts[k + 1], q, false);
      total.value += node.weight * part.value;
      total.error += node.weight * part.error;
    }
  }
  return total;
}

/// Radial nodes r_i = rho sin((i + 1/2) pi / (2N)), clustered toward the boundary.
inline std::vector<double> chebyshev_radial_grid(double rho, int count) {
  if (count < 1) throw ConfigurationError("radial grid needs at least one node");
  std::vector<double> r(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) r[static_cast<std::size_t>(i)] = rho * std::sin((i + 0.5) * std::numbers::pi / (2.0 * count));
  return r;
}

/// Samples of a scalar field on radii x sphere-rule directions.
struct SampledField {
  ProblemGeometry geometry;
  std::vector<double> radii;
  std::vector<SphereNode> sphere;
  std::vector<std::vector<double>> values;  // values[i][k] at radii[i] * sphere[k].point
  std::string provenance;

  void validate() const {
    for (std::size_t i = 1; i < radii.size(); ++i)
      if (!(radii[i] > radii[i - 1])) throw ConfigurationError("sampled field radii must be strictly increasing");
    if (values.size() != radii.size()) throw ConfigurationError("sampled field has mismatched value rows");
    for (const auto& row : values) {
      if (row.size() != sphere.size()) throw ConfigurationError("sampled field has mismatched value columns");
      for (double v : row)
        if (!std::isfinite(v)) throw ConfigurationError("sampled field has a non-finite value");
    }
  }

  /// Largest spread over a sphere |x| = r_i, relative to the largest value.
  double max_anisotropy() const {
    double spread = 0.0, scale = 0.0;
    for (const auto& row : values) {
      const auto [lo, hi] = std::minmax_element(row.begin(), row.end());
      spread = std::max(spread, *hi - *lo);
      for (double v : row) scale = std::max(scale, std::abs(v));
    }
    return scale > 0.0 ? spread / scale : 0.0;
  }
};

struct SolveOptions {
  std::vector<double> radii;  // empty: chebyshev_radial_grid(rho, 128)
  int sphere_degree = 8;
};

/// u = G f sampled on a structured grid. Radial sources are solved once per radius.
inline SampledField solve(const SourceTerm& f, const ProblemGeometry& geo, const QuadratureSpec& q = {},
                          const SolveOptions& opt = {}) {
  geo.validate();
  q.validate();
  f.validate(geo);
  const BallGreen G(geo, q);
  SampledField out;
  out.geometry = geo;
  out.radii = opt.radii.empty() ? chebyshev_radial_grid(geo.rho, 128) : opt.radii;
  out.sphere = sphere_quadrature(geo.n, opt.sphere_degree);
  out.provenance = f.is_radial() ? "green representation, radial kernel" : "green representation, ray quadrature";
  for (double r : out.radii)
    if (!(r >= 0.0 && r < geo.rho)) throw ConfigurationError("solve: grid radii must lie in [0, rho)");
  const std::size_t nr = out.radii.size(), ns = out.sphere.size();
  out.values.assign(nr, std::vector<double>(ns, 0.0));
  if (f.is_radial()) {
    const RadialGreenKernel K(G);
    const auto u = parallel_map<double>(nr, [&](std::size_t i) { return radial_solution_value(f, out.radii[i], K).value; });
    for (std::size_t i = 0; i < nr; ++i) std::fill(out.values[i].begin(), out.values[i].end(), u[i]);
  } else {
    parallel_for(nr * ns, [&](std::size_t idx) {
      const std::size_t i = idx / ns, k = idx % ns;
      out.values[i][k] = solve_at(f, out.radii[i] * out.sphere[k].point, G).value;
    });
  }
  out.validate();
  return out;
}

/// Radial function u(r) = (rho^2 - r^2)_+^s W(r^2), with W stored as
/// piecewise Chebyshev interpolants in q = r^2 on [0, rho^2].
class RadialProfile {
 public:
  static constexpr int kNodes = 16;

  struct Panel {
    double a = 0.0, b = 0.0;
    std::array<double, kNodes> values{};
  };

  RadialProfile() = default;

  /// Adaptive construction from W(q). Panels are bisected until the trailing
  /// Chebyshev coefficients fall below tol * max|W|; `breaks` are forced panel edges.
  template <class WeightFn>
  static RadialProfile from_weight(WeightFn&& W, const ProblemGeometry& geo, std::vector<double> breaks, double tol,
                                   int max_panels = 512) {
    RadialProfile p;
    p.geo_ = geo;
    const double q_end = geo.rho * geo.rho;
    breaks.push_back(0.0);
    breaks.push_back(q_end);
    std::sort(breaks.begin(), breaks.end());
    breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
    std::vector<double> edges;
    for (double b : breaks)
      if (b >= 0.0 && b <= q_end) edges.push_back(b);

    auto sample = [&](double a, double b) {
      Panel pan{a, b, {}};
      const auto xs = cheb_points();
      const auto vals = parallel_map<double>(kNodes, [&](std::size_t k) { return W(a + 0.5 * (b - a) * (1.0 + xs[k])); });
      std::copy(vals.begin(), vals.end(), pan.values.begin());
      return pan;
    };
    std::vector<Panel> work;
    for (std::size_t i = 0; i + 1 < edges.size(); ++i) work.push_back(sample(edges[i], edges[i + 1]));
    double scale = 0.0;
    for (const auto& pan : work)
      for (double v : pan.values) scale = std::max(scale, std::abs(v));
    if (scale == 0.0) scale = 1.0;

    std::vector<Panel> done;
    while (!work.empty()) {
      Panel pan = work.back();
      work.pop_back();
      const auto c = cheb_coefficients(pan.values);
      const double tail = std::abs(c[kNodes - 1]) + std::abs(c[kNodes - 2]) + std::abs(c[kNodes - 3]);
      const bool tiny = (pan.b - pan.a) < 1e-9 * q_end;
      if (tail <= tol * scale || tiny) {
        p.resolved_ = p.resolved_ && !tiny;
        done.push_back(pan);
        continue;
      }
      if (static_cast<int>(done.size() + work.size()) + 2 > max_panels)
        throw AccuracyError("radial profile: panel budget exhausted", 0.0, tail);
      const double mid = 0.5 * (pan.a + pan.b);
      work.push_back(sample(pan.a, mid));
      work.push_back(sample(mid, pan.b));
    }
    std::sort(done.begin(), done.end(), [](const Panel& x, const Panel& y) { return x.a < y.a; });
    p.panels_ = std::move(done);
    return p;
  }

  /// From u(r) itself: W(q) = u(sqrt q) / (rho^2 - q)^s.
  template <class UFn>
  static RadialProfile from_values(UFn&& u, const ProblemGeometry& geo, std::vector<double> breaks, double tol,
                                   int max_panels = 512) {
    const double rho2 = geo.rho * geo.rho;
    auto W = [&](double q) { return u(std::sqrt(q)) / std::pow(rho2 - q, geo.s); };
    return from_weight(W, geo, std::move(breaks), tol, max_panels);
  }

  /// c_a * a + c_b * b, re-interpolated on the union of both panel sets.
  static RadialProfile combine(double ca, const RadialProfile& a, double cb, const RadialProfile& b, double tol) {
    std::vector<double> breaks;
    for (const auto& pan : a.panels_) breaks.push_back(pan.a);
    for (const auto& pan : b.panels_) breaks.push_back(pan.a);
    auto W = [&](double q) { return ca * a.weight(q) + cb * b.weight(q); };
    RadialProfile out = from_weight(W, a.geo_, breaks, tol, 4 * static_cast<int>(breaks.size()) + 64);
    return out;
  }

  const ProblemGeometry& geometry() const { return geo_; }
  std::size_t panel_count() const { return panels_.size(); }
  bool resolved() const { return resolved_; }

  double weight(double q) const {
    if (panels_.empty()) return 0.0;
    const double q_end = geo_.rho * geo_.rho;
    q = std::clamp(q, 0.0, q_end);
    auto it = std::upper_bound(panels_.begin(), panels_.end(), q, [](double v, const Panel& p) { return v < p.a; });
    const Panel& pan = it == panels_.begin() ? panels_.front() : *(it - 1);
    return barycentric(pan, q);
  }

  double operator()(double r) const {
    const double d = geo_.rho * geo_.rho - r * r;
    return d > 0.0 ? std::pow(d, geo_.s) * weight(r * r) : 0.0;
  }

  double at(const Vec3& x) const { return (*this)(norm(x)); }

  /// lim u((rho - delta) e) / delta^s = (2 rho)^s W(rho^2).
  double quotient_limit() const { return std::pow(2.0 * geo_.rho, geo_.s) * weight(geo_.rho * geo_.rho); }

  /// Handle for eval_L: C^2 inside B_rho, zero outside, kink on the sphere.
  EvaluableFunction as_function() const {
    EvaluableFunction f;
    auto self = std::make_shared<RadialProfile>(*this);
    f.values = [self](const Vec3& y) { return self->at(y); };
    f.smooth = {{0, 0, 0}, geo_.rho};
    f.support = BallRegion{{0, 0, 0}, geo_.rho};
    f.kinks = {BallRegion{{0, 0, 0}, geo_.rho}};
    return f;
  }

 private:
  static std::array<double, kNodes> cheb_points() {
    std::array<double, kNodes> x{};
    for (int k = 0; k < kNodes; ++k) x[static_cast<std::size_t>(k)] = -std::cos((2.0 * k + 1.0) * std::numbers::pi / (2.0 * kNodes));
    return x;
  }

  static std::array<double, kNodes> cheb_coefficients(const std::array<double, kNodes>& f) {
    std::array<double, kNodes> c{};
    for (int j = 0; j < kNodes; ++j) {
      double acc = 0.0;
      for (int k = 0; k < kNodes; ++k)
        acc += f[static_cast<std::size_t>(k)] * std::cos(j * (2.0 * k + 1.0) * std::numbers::pi / (2.0 * kNodes));
      c[static_cast<std::size_t>(j)] = 2.0 * acc / kNodes;
    }
    return c;
  }

  static double barycentric(const Panel& pan, double q) {
    static const std::array<double, kNodes> xs = cheb_points();
    const double x = (2.0 * q - pan.a - pan.b) / (pan.b - pan.a);
    double num = 0.0, den = 0.0;
    for (int k = 0; k < kNodes; ++k) {
      const auto ku = static_cast<std::size_t>(k);
      const double diff = x - xs[ku];
      if (diff == 0.0) return pan.values[ku];
      // first-kind Chebyshev barycentric weights, sign flipped because xs ascends
      const double w = ((k % 2 == 0) ? 1.0 : -1.0) * std::sin((2.0 * k + 1.0) * std::numbers::pi / (2.0 * kNodes)) / diff;
      num += w * pan.values[ku];
      den += w;
    }
    return num / den;
  }

  ProblemGeometry geo_;
  std::vector<Panel> panels_;
  bool resolved_ = true;
};

/// Solves a radial problem and returns the interpolant of u.
inline RadialProfile solve_radial(const SourceTerm& f, const ProblemGeometry& geo, const QuadratureSpec& q = {},
                                  double interp_tol = 1e-9) {
  geo.validate();
  f.validate(geo);
  if (!f.is_radial()) throw UnsupportedError("solve_radial needs a radial source");
  const RadialGreenKernel K(BallGreen(geo, q));
  std::vector<double> breaks{f.r_inner * f.r_inner, f.r_outer * f.r_outer};
  return RadialProfile::from_values([&](double r) { return radial_solution_value(f, r, K).value; }, geo, breaks,
                                    interp_tol);
}

/// Sweep of u(x0 - delta x0/|x0|) / delta^s with a linear-in-delta extrapolation.
struct BoundaryQuotient {
  Vec3 x0{};
  Vec3 direction{};  // inward unit normal
  std::vector<std::pair<double, double>> sweep;
  double extrapolated = 0.0;
  double uncertainty = 0.0;
  bool ill_conditioned = false;
  std::string warning;
};

/// delta = rho * 1e-2 * 2^{-k} down to 1e-4 rho, with 1e-4 rho as the last entry.
inline std::vector<double> default_deltas(double rho) {
  std::vector<double> d;
  for (double v = 1e-2; v > 1e-4 * (1 + 1e-9); v *= 0.5) d.push_back(rho * v);
  d.push_back(rho * 1e-4);
  return d;
}

template <class Field>
BoundaryQuotient boundary_quotient(Field&& u, const Vec3& x0, const ProblemGeometry& geo, const std::vector<double>& deltas) {
  geo.validate();
  if (std::abs(norm(x0) - geo.rho) > 1e-12 * geo.rho) throw DomainError("boundary_quotient: x0 must lie on the sphere |x| = rho");
  if (deltas.size() < 2) throw ConfigurationError("boundary_quotient: need at least two deltas");
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    if (!(deltas[i] > 0.0)) throw ConfigurationError("boundary_quotient: deltas must be positive");
    if (i > 0 && !(deltas[i] < deltas[i - 1])) throw ConfigurationError("boundary_quotient: deltas must decrease strictly");
  }
  BoundaryQuotient bq;
  bq.x0 = x0;
  bq.direction = -(1.0 / geo.rho) * x0;
  for (double d : deltas) bq.sweep.emplace_back(d, u(x0 + d * bq.direction) / std::pow(d, geo.s));
  const std::size_t m = bq.sweep.size();
  const auto [d1, q1] = bq.sweep[m - 1];
  const auto [d2, q2] = bq.sweep[m - 2];
  const double slope = (q2 - q1) / (d2 - d1);
  bq.extrapolated = q1 - slope * d1;
  if (m >= 3) {
    const auto [d3, q3] = bq.sweep[m - 3];
    bq.uncertainty = std::abs(q3 - (bq.extrapolated + slope * d3));
  } else {
    bq.uncertainty = std::abs(q1 - bq.extrapolated);
  }
  double scale = 0.0;
  for (const auto& [d, v] : bq.sweep) scale = std::max(scale, std::abs(v));
  int ups = 0, downs = 0;
  for (std::size_t i = 1; i < m; ++i) {
    const double step = bq.sweep[i].second - bq.sweep[i - 1].second;
    if (step > 1e-9 * scale) ++ups;
    if (step < -1e-9 * scale) ++downs;
  }
  if (ups > 0 && downs > 0) {
    bq.ill_conditioned = true;
    bq.warning = "quotient sweep is not monotone; extrapolation is ill-conditioned";
  }
  return bq;
}

/// Radial quadrature grid on (0, rho): Gauss-Legendre nodes, clustered at both ends.
struct RadialGrid {
  std::vector<double> nodes;
  std::vector<double> weights;

  static RadialGrid gauss_legendre(double rho, int count) {
    if (count < 2) throw ConfigurationError("radial grid needs at least two nodes");
    const auto [x, w] = fraclab::gauss_legendre(count);
    RadialGrid g;
    for (std::size_t i = 0; i < x.size(); ++i) {
      g.nodes.push_back(0.5 * rho * (1.0 + x[i]));
      g.weights.push_back(0.5 * rho * w[i]);
    }
    return g;
  }

  void validate(double rho) const {
    if (nodes.size() != weights.size() || nodes.empty()) throw ConfigurationError("radial grid: nodes and weights differ in size");
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      if (!(nodes[i] > 0.0 && nodes[i] < rho)) throw ConfigurationError("radial grid nodes must lie in (0, rho)");
      if (i > 0 && !(nodes[i] > nodes[i - 1])) throw ConfigurationError("radial grid nodes must increase strictly");
    }
  }
};

/// Nystrom discretization of f -> int_0^rho K(r,t) f(t) t^{n-1} dt.
///
/// Off-diagonal entries are K(r_i, r_j) w_j r_j^{n-1}. The diagonal absorbs the
/// singular part: A_ii = T(r_i) - sum_{j != i} A_ij with T the exact torsion
/// gamma (rho^2 - r_i^2)^s, i.e. (Au)_i = sum_j A_ij (u_j - u_i) + T(r_i) u_i.
struct RadialOperator {
  ProblemGeometry geometry;
  RadialGrid grid;
  Eigen::MatrixXd matrix;
  std::vector<double> measure;  // w_j r_j^{n-1}
  std::shared_ptr<const RadialGreenKernel> kernel;

  double torsion(double r) const {
    const double d = geometry.rho * geometry.rho - r * r;
    return d > 0.0 ? torsion_constant(geometry.n, geometry.s) * std::pow(d, geometry.s) : 0.0;
  }
};

inline RadialOperator radial_green_operator(const ProblemGeometry& geo, const RadialGrid& grid, const QuadratureSpec& q = {}) {
  geo.validate();
  grid.validate(geo.rho);
  RadialOperator op;
  op.geometry = geo;
  op.grid = grid;
  op.kernel = std::make_shared<RadialGreenKernel>(BallGreen(geo, q));
  const std::size_t N = grid.nodes.size();
  for (std::size_t j = 0; j < N; ++j) op.measure.push_back(grid.weights[j] * std::pow(grid.nodes[j], geo.n - 1));
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(N));
  parallel_for(N, [&](std::size_t i) {
    for (std::size_t j = i + 1; j < N; ++j) {
      const double v = (*op.kernel)(grid.nodes[i], grid.nodes[j]);
      if (!std::isfinite(v)) throw AccuracyError("radial operator: non-finite kernel entry", v, 0.0);
      K(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
    }
  });
  K.triangularView<Eigen::StrictlyLower>() = K.transpose();
  op.matrix.resize(K.rows(), K.cols());
  for (std::size_t i = 0; i < N; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    double off = 0.0;
    for (std::size_t j = 0; j < N; ++j) {
      const auto jj = static_cast<Eigen::Index>(j);
      if (i == j) continue;
      op.matrix(ii, jj) = K(ii, jj) * op.measure[j];
      off += op.matrix(ii, jj);
    }
    op.matrix(ii, ii) = op.torsion(grid.nodes[i]) - off;
  }
  return op;
}

struct RadialEigenpair {
  double lambda = 0.0;  // eigenvalue of (-Delta)^s: 1 / mu
  double mu = 0.0;      // leading eigenvalue of the discrete Green operator
  std::vector<double> values;  // at grid nodes, sup-normalized
  double residual = 0.0;       // max |u - lambda A u|
  int iterations = 0;
  std::shared_ptr<const RadialOperator> op;

  /// Nystrom extension of the eigenfunction to any r in [0, rho].
  double operator()(double r) const {
    const auto& g = op->geometry;
    if (r >= g.rho) return 0.0;
    const auto& nodes = op->grid.nodes;
    double num = 0.0, mass = 0.0;
    for (std::size_t j = 0; j < nodes.size(); ++j) {
      if (r == nodes[j]) return values[j];
      const double k = (*op->kernel)(r, nodes[j]) * op->measure[j];
      num += k * values[j];
      mass += k;
    }
    return lambda * num / (1.0 - lambda * (op->torsion(r) - mass));
  }

  double at(const Vec3& x) const { return (*this)(norm(x)); }
};

/// Leading eigenpair by power iteration on the discrete Green operator.
inline RadialEigenpair radial_eigenpair(const ProblemGeometry& geo, const RadialGrid& grid, const QuadratureSpec& q = {},
                                        double tol = 1e-12, int max_iterations = 5000) {
  if (grid.nodes.size() < 64) throw ConfigurationError("radial_eigenpair needs at least 64 grid nodes");
  auto op = std::make_shared<RadialOperator>(radial_green_operator(geo, grid, q));
  const Eigen::MatrixXd& A = op->matrix;
  Eigen::VectorXd v = Eigen::VectorXd::Ones(A.rows());
  double mu = 0.0;
  RadialEigenpair out;
  for (int it = 1; it <= max_iterations; ++it) {
    Eigen::VectorXd w = A * v;
    const double mu_new = w.cwiseAbs().maxCoeff();
    w /= mu_new;
    const double change = (w - v).cwiseAbs().maxCoeff();
    v = w;
    mu = mu_new;
    out.iterations = it;
    if (change < tol) break;
    if (it == max_iterations) throw ConvergenceError("radial_eigenpair: power iteration stagnated");
  }
  if (v.minCoeff() < 0.0) v = -v;
  out.mu = mu;
  out.lambda = 1.0 / mu;
  out.values.assign(v.data(), v.data() + v.size());
  out.residual = (v - out.lambda * (A * v)).cwiseAbs().maxCoeff();
  out.op = op;
  return out;
}

}  // namespace fraclab
