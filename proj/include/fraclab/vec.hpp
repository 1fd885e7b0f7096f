#pragma once

#include <algorithm>
#include <array>
#include <cmath>

namespace fraclab {

/// Points of R^n for n <= 3 are embedded in R^3 with trailing zeros, so a
/// single value type serves every dimension.
using Vec3 = std::array<double, 3>;

inline Vec3 operator+(const Vec3& a, const Vec3& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
inline Vec3 operator-(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
inline Vec3 operator*(double c, const Vec3& a) { return {c * a[0], c * a[1], c * a[2]}; }
inline Vec3 operator-(const Vec3& a) { return {-a[0], -a[1], -a[2]}; }

inline double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
inline double norm2(const Vec3& a) { return dot(a, a); }
inline double norm(const Vec3& a) { return std::hypot(a[0], a[1], a[2]); }
inline double distance(const Vec3& a, const Vec3& b) { return norm(a - b); }

inline Vec3 normalized(const Vec3& a) {
  const double l = norm(a);
  return {a[0] / l, a[1] / l, a[2] / l};
}

inline Vec3 unit_axis(int i) {
  Vec3 e{0.0, 0.0, 0.0};
  e[static_cast<std::size_t>(i)] = 1.0;
  return e;
}

/// Returns the parameters t_lo <= t_hi at which the line p + t*dir meets the
/// sphere |y - center| = radius, or false when it misses. dir must be a unit vector.
inline bool ray_sphere(const Vec3& p, const Vec3& dir, const Vec3& center, double radius, double& t_lo,
                       double& t_hi) {
  const Vec3 q = p - center;
  const double b = dot(q, dir);
  const double c = norm2(q) - radius * radius;
  const double disc = b * b - c;
  if (disc < 0.0) return false;
  const double root = std::sqrt(disc);
  // Stable form of the two roots of t^2 + 2bt + c.
  const double big = (b >= 0.0) ? -b - root : -b + root;
  if (big == 0.0) {
    t_lo = t_hi = 0.0;
    return true;
  }
  const double other = c / big;
  t_lo = std::min(big, other);
  t_hi = std::max(big, other);
  return true;
}

}  // namespace fraclab
