#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <queue>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include "fraclab/errors.hpp"

namespace fraclab {

/// Tolerances shared by every numerical integration in the library.
///
/// Interval integrals use globally adaptive Gauss-Kronrod (15 points) or
/// tanh-sinh for endpoint singularities; integrals over spheres use the
/// product rule of `sphere_degree` returned by sphere_quadrature().
struct QuadratureSpec {
  double abs_tol = 1e-12;
  double rel_tol = 1e-10;
  int max_subdivisions = 400;
  int sphere_degree = 24;

  void validate() const {
    if (!(abs_tol > 0.0) || !(rel_tol > 0.0))
      throw ConfigurationError("quadrature tolerances must be positive");
    if (max_subdivisions < 1) throw ConfigurationError("max_subdivisions must be >= 1");
    if (sphere_degree < 1) throw ConfigurationError("sphere_degree must be >= 1");
  }

  QuadratureSpec with_rel_tol(double r) const {
    QuadratureSpec q = *this;
    q.rel_tol = r;
    return q;
  }
};

struct QuadResult {
  double value = 0.0;
  double error = 0.0;
  int subdivisions = 0;
};

namespace detail {

// Kronrod 15-point abscissae (positive half) with the embedded 7-point Gauss rule.
inline constexpr double kGkX[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr double kGkW[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr double kGW[4] = {0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
                                  0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Panel {
  double a, b, value, error;
  bool operator<(const Panel& o) const { return error < o.error; }
};

template <class F>
Panel gk15(F& f, double a, double b) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  double fv[15];
  fv[7] = f(c);
  double kron = kGkW[7] * fv[7];
  double gauss = kGW[3] * fv[7];
  for (int j = 0; j < 7; ++j) {
    const double dx = h * kGkX[j];
    const double f1 = f(c - dx);
    const double f2 = f(c + dx);
    fv[j] = f1;
    fv[14 - j] = f2;
    kron += kGkW[j] * (f1 + f2);
    if (j % 2 == 1) gauss += kGW[j / 2] * (f1 + f2);
  }
  const double mean = 0.5 * kron;
  double asc = kGkW[7] * std::abs(fv[7] - mean);
  for (int j = 0; j < 7; ++j) asc += kGkW[j] * (std::abs(fv[j] - mean) + std::abs(fv[14 - j] - mean));
  asc *= std::abs(h);
  kron *= h;
  gauss *= h;
  double err = std::abs(kron - gauss);
  if (asc != 0.0 && err != 0.0) err = asc * std::min(1.0, std::pow(200.0 * err / asc, 1.5));
  return {a, b, kron, err};
}

}  // namespace detail

/// Globally adaptive Gauss-Kronrod integration of f over [a, b].
/// Throws AccuracyError when the tolerance is not met within
/// q.max_subdivisions bisections, unless `throw_on_failure` is false.
template <class F>
QuadResult integrate_adaptive(F&& f, double a, double b, const QuadratureSpec& q, bool throw_on_failure = true) {
  if (a == b) return {};
  std::priority_queue<detail::Panel> heap;
  detail::Panel first = detail::gk15(f, a, b);
  double total = first.value;
  double total_err = first.error;
  heap.push(first);
  int subdivisions = 0;
  auto converged = [&] { return total_err <= std::max(q.abs_tol, q.rel_tol * std::abs(total)); };
  while (!converged() && subdivisions < q.max_subdivisions) {
    const detail::Panel worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    if (mid == worst.a || mid == worst.b) {  // interval exhausted at machine precision
      heap.push(worst);
      break;
    }
    const detail::Panel left = detail::gk15(f, worst.a, mid);
    const detail::Panel right = detail::gk15(f, mid, worst.b);
    total += left.value + right.value - worst.value;
    total_err += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
    ++subdivisions;
  }
  // Re-sum to shed accumulated cancellation in the running totals.
  total = 0.0;
  total_err = 0.0;
  while (!heap.empty()) {
    total += heap.top().value;
    total_err += heap.top().error;
    heap.pop();
  }
  if (throw_on_failure && !converged())
    throw AccuracyError("adaptive quadrature did not converge", total, total_err);
  return {total, total_err, subdivisions};
}

/// tanh-sinh integration for integrands with algebraic or logarithmic
/// endpoint singularities. The integrand may take (x) or (x, xc) where xc is
/// the signed distance to the nearest endpoint.
template <class F>
QuadResult integrate_endpoint_singular(F&& f, double a, double b, const QuadratureSpec& q,
                                       bool throw_on_failure = true) {
  if (a == b) return {};
  thread_local boost::math::quadrature::tanh_sinh<double> integrator(12);
  double err = 0.0;
  double l1 = 0.0;
  double value = 0.0;
  try {
    if constexpr (std::is_invocable_v<F&, double, double>) {
      value = integrator.integrate(f, a, b, q.rel_tol, &err, &l1);
    } else {
      // Boost's one-argument adaptor asserts when an abscissa rounds onto an endpoint
      auto g = [&](double x, double) { return f(x); };
      value = integrator.integrate(g, a, b, q.rel_tol, &err, &l1);
    }
  } catch (const std::exception& e) {
    throw AccuracyError(std::string("tanh-sinh quadrature failed: ") + e.what(), value, err);
  }
  if (throw_on_failure && err > std::max(q.abs_tol, 10.0 * q.rel_tol * l1))
    throw AccuracyError("tanh-sinh quadrature did not converge", value, err);
  return {value, err, 0};
}

/// Gauss-Legendre nodes and weights on [-1, 1] (Newton iteration on P_m).
inline std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int m) {
  std::vector<double> x(static_cast<std::size_t>(m)), w(static_cast<std::size_t>(m));
  for (int i = 0; i < (m + 1) / 2; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (m + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int k = 1; k <= m; ++k) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p2) / k;
      }
      dp = m * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    double p0 = 1.0, p1 = 0.0;
    for (int k = 1; k <= m; ++k) {
      const double p2 = p1;
      p1 = p0;
      p0 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p2) / k;
    }
    dp = m * (z * p0 - p1) / (z * z - 1.0);
    const auto lo = static_cast<std::size_t>(i);
    const auto hi = static_cast<std::size_t>(m - 1 - i);
    x[lo] = -z;
    x[hi] = z;
    w[lo] = w[hi] = 2.0 / ((1.0 - z * z) * dp * dp);
  }
  return {x, w};
}

}  // namespace fraclab
