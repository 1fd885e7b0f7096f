#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "fraclab/errors.hpp"
#include "fraclab/quadrature.hpp"
#include "fraclab/vec.hpp"

namespace fraclab {

struct SphereNode {
  Vec3 point;
  double weight;
};

/// Positive-weight rule on S^{n-1} (n = 1, 2, 3), exact for spherical
/// polynomials up to `degree`.
///
/// n = 1 is the two-point set {-e1, e1}; n = 2 uses an even number of
/// equispaced angles; n = 3 is Gauss-Legendre in omega_1 times equispaced
/// azimuth about e1. Every rule is symmetric under omega -> -omega.
inline std::vector<SphereNode> sphere_quadrature(int n, int degree) {
  if (degree < 1) throw DomainError("sphere_quadrature: degree must be >= 1");
  std::vector<SphereNode> nodes;
  switch (n) {
    case 1:
      nodes.push_back({{-1.0, 0.0, 0.0}, 1.0});
      nodes.push_back({{1.0, 0.0, 0.0}, 1.0});
      break;
    case 2: {
      int m = degree + 1;
      m += m % 2;
      for (int k = 0; k < m; ++k) {
        const double th = 2.0 * std::numbers::pi * k / m;
        nodes.push_back({{std::cos(th), std::sin(th), 0.0}, 2.0 * std::numbers::pi / m});
      }
      break;
    }
    case 3: {
      const int p = degree / 2 + 1;
      int m = degree + 1;
      m += m % 2;
      const auto [z, wz] = gauss_legendre(p);
      for (std::size_t i = 0; i < z.size(); ++i) {
        const double rho = std::sqrt(std::max(0.0, 1.0 - z[i] * z[i]));
        for (int k = 0; k < m; ++k) {
          const double ph = 2.0 * std::numbers::pi * k / m;
          nodes.push_back({{z[i], rho * std::cos(ph), rho * std::sin(ph)}, wz[i] * 2.0 * std::numbers::pi / m});
        }
      }
      break;
    }
    default:
      throw UnsupportedError("sphere_quadrature: only n in {1,2,3} is supported");
  }
  return nodes;
}

/// Half of a symmetric sphere rule with doubled weights, for integrands that
/// are even in omega.
inline std::vector<SphereNode> half_sphere_rule(int n, int degree) {
  std::vector<SphereNode> half;
  for (const auto& node : sphere_quadrature(n, degree)) {
    for (double c : node.point) {
      if (std::abs(c) <= 1e-12) continue;
      if (c > 0.0) half.push_back({node.point, 2.0 * node.weight});
      break;
    }
  }
  return half;
}

namespace detail {
inline double radical_inverse(std::uint64_t i, std::uint64_t base) {
  double f = 1.0, r = 0.0;
  while (i > 0) {
    f /= static_cast<double>(base);
    r += f * static_cast<double>(i % base);
    i /= base;
  }
  return r;
}
}  // namespace detail

/// Deterministic low-discrepancy points in the ball B_radius(center) of R^n:
/// a Halton sequence with a seeded Cranley-Patterson shift, filtered to the ball.
inline std::vector<Vec3> ball_samples(int n, const Vec3& center, double radius, std::size_t count,
                                      std::uint64_t seed) {
  static constexpr std::uint64_t bases[3] = {2, 3, 5};
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  double shift[3] = {uni(rng), uni(rng), uni(rng)};
  std::vector<Vec3> pts;
  pts.reserve(count);
  for (std::uint64_t i = 1; pts.size() < count; ++i) {
    Vec3 y{0.0, 0.0, 0.0};
    for (int d = 0; d < n; ++d) {
      double u = detail::radical_inverse(i, bases[d]) + shift[d];
      u -= std::floor(u);
      y[static_cast<std::size_t>(d)] = 2.0 * u - 1.0;
    }
    if (norm2(y) < 1.0) pts.push_back(center + radius * y);
  }
  return pts;
}

}  // namespace fraclab
