#pragma once

#include <cmath>

#include "fraclab/errors.hpp"
#include "fraclab/operator.hpp"
#include "fraclab/quadrature.hpp"
#include "fraclab/specialfn.hpp"

namespace fraclab {

/// exp(-1/(1 - 16|x|^2)) on B_{1/4}, before normalization.
inline double bump_shape(double r) {
  const double q = 1.0 - 16.0 * r * r;
  return q > 0.0 ? std::exp(-1.0 / q) : 0.0;
}

/// Normalization A such that A * bump_shape(|x|) has unit mass in R^n.
inline double bump_normalization(int n, const QuadratureSpec& q = {}) {
  auto radial = [n](double r) { return bump_shape(r) * std::pow(r, n - 1); };
  return 1.0 / (sphere_area(n) * integrate_adaptive(radial, 0.0, 0.25, q).value);
}

/// eta: smooth, nonnegative, supported in B_{1/4}, unit mass.
inline EvaluableFunction unit_bump(int n, const QuadratureSpec& q = {}) {
  const double A = bump_normalization(n, q);
  EvaluableFunction f;
  f.values = [A](const Vec3& y) { return A * bump_shape(norm(y)); };
  f.support = BallRegion{{0, 0, 0}, 0.25};
  return f;
}

/// Constants of the barrier phi = v + C1 eta with v = (1 - |x|^2)_+^s.
struct BarrierConstants {
  double k = 0.0;        // L v, constant in B_1
  double c1 = 0.0;       // bump weight
  double C = 0.0;        // sup of phi on B_{1/2}
  double eta0 = 0.0;     // eta(0)
  double lambda = 0.0;   // ellipticity used for c1
};

/// k from eval_L at the origin; C1 = (k + 1) / (lambda (4/5)^{n+2s}) makes
/// L phi <= -1 on B_1 \ B_{1/2} because L eta <= -lambda (4/5)^{n+2s} there.
inline BarrierConstants barrier_constants(const AnisoKernel& kernel, FracOrder s, const QuadratureSpec& q = {}) {
  kernel.validate(q.sphere_degree);
  BarrierConstants b;
  const int n = kernel.n;
  b.k = eval_L(torsion_profile(s), {0, 0, 0}, kernel, s, q).value;
  b.lambda = kernel.lambda;
  b.c1 = (b.k + 1.0) / (kernel.lambda * std::pow(0.8, n + 2.0 * s));
  b.eta0 = bump_normalization(n, q) * bump_shape(0.0);
  b.C = 1.0 + b.c1 * b.eta0;
  return b;
}

/// psi(x) = alpha_r phi((x - x_r) / r).
struct BarrierSpec {
  Vec3 center{0.0, 0.0, 0.0};
  double radius = 1.0;
  double c1 = 0.0;
  double alpha = 1.0;

  void validate() const {
    if (!(radius > 0.0)) throw DomainError("barrier radius must be positive");
    if (!(alpha > 0.0)) throw DomainError("barrier scale alpha_r must be positive");
    if (!(c1 >= 0.0)) throw DomainError("barrier bump weight must be nonnegative");
  }
};

inline double barrier_value(const BarrierSpec& spec, const Vec3& x, double s, int n, const QuadratureSpec& q = {}) {
  spec.validate();
  const Vec3 y = (1.0 / spec.radius) * (x - spec.center);
  const double r2 = norm2(y);
  if (r2 >= 1.0) return 0.0;
  const double eta = spec.c1 > 0.0 ? bump_normalization(n, q) * bump_shape(std::sqrt(r2)) : 0.0;
  return spec.alpha * (std::pow(1.0 - r2, s) + spec.c1 * eta);
}

/// L psi(x) = alpha r^{-2s} (L v(y) + C1 L eta(y)), y = (x - x_r)/r; each
/// piece goes through eval_L, so eta is handled by the far-field route off its support.
inline EvalResult barrier_L(const BarrierSpec& spec, const Vec3& x, const AnisoKernel& kernel, FracOrder s,
                            const QuadratureSpec& q = {}) {
  spec.validate();
  const Vec3 y = (1.0 / spec.radius) * (x - spec.center);
  const EvalResult lv = eval_L(torsion_profile(s), y, kernel, s, q);
  EvalResult le{};
  if (spec.c1 > 0.0) le = eval_L(unit_bump(kernel.n, q), y, kernel, s, q);
  const double scale = spec.alpha * std::pow(spec.radius, -2.0 * s);
  return {scale * (lv.value + spec.c1 * le.value), scale * (lv.error + spec.c1 * le.error)};
}

}  // namespace fraclab
