#pragma once

#include <cmath>
#include <numbers>
#include <optional>

#include "fraclab/errors.hpp"
#include "fraclab/quadrature.hpp"
#include "fraclab/specialfn.hpp"
#include "fraclab/vec.hpp"

namespace fraclab {

/// Dimension, fractional order and radius of the ball B_rho.
struct ProblemGeometry {
  int n = 1;
  double s = 0.5;
  double rho = 1.0;

  /// n == 2s happens only for (n, s) = (1, 1/2), where the Green function is logarithmic.
  bool log_branch() const { return n == 1 && s == 0.5; }

  void validate() const {
    if (n < 1 || n > 3) throw UnsupportedError("dimension must be 1, 2 or 3");
    if (!(s > 0.0 && s < 1.0)) throw DomainError("fractional order s must lie in (0,1)");
    if (!(rho > 0.0)) throw DomainError("ball radius must be positive");
  }
};

/// gamma(n,s) = Gamma(n/2) / (4^s Gamma(n/2 + s) Gamma(1+s)): the torsion
/// function of B_rho is gamma(n,s) (rho^2 - |x|^2)_+^s.
inline double torsion_constant(int n, double s) {
  return std::tgamma(0.5 * n) / (std::pow(4.0, s) * std::tgamma(0.5 * n + s) * std::tgamma(1.0 + s));
}

inline double torsion_value(const Vec3& x, const ProblemGeometry& g) {
  const double q = g.rho * g.rho - norm2(x);
  return q > 0.0 ? torsion_constant(g.n, g.s) * std::pow(q, g.s) : 0.0;
}

/// kappa(n,s) = Gamma(n/2) / (4^s pi^{n/2} Gamma(s)^2), the normalization of
/// G = kappa |x-z|^{2s-n} I(r0; s, n).
inline double green_kappa(int n, double s) {
  const double gs = std::tgamma(s);
  return std::tgamma(0.5 * n) / (std::pow(4.0, s) * std::pow(std::numbers::pi, 0.5 * n) * gs * gs);
}

/// Normalization of the logarithmic representation for (n,s) = (1,1/2).
inline double green_kappa_log() { return 1.0 / std::numbers::pi; }

/// r0(x,z) = (rho^2-|x|^2)(rho^2-|z|^2) / (rho^2 |x-z|^2).
inline double r0(const Vec3& x, const Vec3& z, const ProblemGeometry& g) {
  const double d2 = norm2(x - z);
  if (d2 == 0.0) throw SingularityError("r0: x and z coincide");
  const double r2 = g.rho * g.rho;
  if (norm2(x) >= r2 || norm2(z) >= r2) {
    if (norm2(x) > r2 || norm2(z) > r2) throw DomainError("r0: points must lie in the closed ball");
    return 0.0;
  }
  return (r2 - norm2(x)) * (r2 - norm2(z)) / (r2 * d2);
}

struct GreenValue {
  enum class Branch { power, logarithmic };
  double value = 0.0;
  Branch branch = Branch::power;
  double error = 0.0;
};

/// Explicit fractional Green function of the ball B_rho.
///
/// Power branch: G = kappa |x-z|^{2s-n} I(r0). For (1, 1/2) the logarithmic
/// form kappa_log log((rho^2 - xz + sqrt((rho^2-x^2)(rho^2-z^2))) / (rho|z-x|))
/// is used; it coincides with the power form since I(r; 1/2, 1) = 2 asinh(sqrt r)
/// and kappa_log = 2 kappa(1, 1/2).
class BallGreen {
 public:
  explicit BallGreen(ProblemGeometry g, QuadratureSpec q = {}, std::optional<double> kappa = std::nullopt)
      : geom_((g.validate(), g)),
        q_(q),
        profile_(g.s, g.n, q, GreenProfile::Method::incomplete_beta),
        kappa_(kappa.value_or(green_kappa(g.n, g.s))) {}

  const ProblemGeometry& geometry() const { return geom_; }
  const GreenProfile& profile() const { return profile_; }
  const QuadratureSpec& quadrature() const { return q_; }
  double kappa() const { return kappa_; }

  /// Checked evaluation. Points outside the closed ball give 0.
  GreenValue operator()(const Vec3& x, const Vec3& z) const {
    const double d = distance(x, z);
    if (d < 1e-14) throw SingularityError("green: x and z coincide");
    GreenValue out;
    out.branch = geom_.log_branch() ? GreenValue::Branch::logarithmic : GreenValue::Branch::power;
    const double r2 = geom_.rho * geom_.rho;
    if (norm2(x) >= r2 || norm2(z) >= r2) return out;
    if (geom_.log_branch()) {
      const double xz = dot(x, z);
      const double root = std::sqrt((r2 - norm2(x)) * (r2 - norm2(z)));
      out.value = 2.0 * kappa_ * std::log((r2 - xz + root) / (geom_.rho * d));
    } else {
      out.value = kappa_ * std::pow(d, 2.0 * geom_.s - geom_.n) * profile_(r0(x, z, geom_));
    }
    out.error = q_.rel_tol * out.value;
    return out;
  }

  /// G written through d = |x - z| and A = (rho^2-|x|^2)(rho^2-|z|^2)/rho^2.
  double from_distance(double d, double A) const {
    if (A <= 0.0) return 0.0;
    if (geom_.log_branch()) return 2.0 * kappa_ * std::asinh(std::sqrt(A) / d);
    return kappa_ * power_times_profile(d, A, 2.0 * geom_.s - geom_.n);
  }

  /// d^{n-1} G, the integrand weight of polar coordinates centred at x.
  /// Finite as d -> 0 whenever n < 2s.
  double times_distance_power(double d, double A) const {
    if (A <= 0.0) return 0.0;
    if (geom_.log_branch()) return 2.0 * kappa_ * std::asinh(std::sqrt(A) / d);
    return kappa_ * power_times_profile(d, A, 2.0 * geom_.s - 1.0);
  }

 private:
  // d^p I(A/d^2), switching to the large-argument asymptote before A/d^2 overflows
  double power_times_profile(double d, double A, double p) const {
    const double r = A / (d * d);
    if (r <= 1e200) return std::pow(d, p) * profile_(r);
    const double s = geom_.s, e = s - 0.5 * geom_.n;
    if (e < 0.0) return std::pow(d, p) * profile_.at_infinity();
    return std::pow(A, e) * std::pow(d, p - 2.0 * e) / e;
  }

  ProblemGeometry geom_;
  QuadratureSpec q_;
  GreenProfile profile_;
  double kappa_;
};

inline GreenValue green(const Vec3& x, const Vec3& z, const ProblemGeometry& g, const QuadratureSpec& q = {}) {
  return BallGreen(g, q)(x, z);
}

/// Leading coefficient of G((rho - delta) e, z) = a0(z, e) delta^s + o(delta^s).
struct ExpansionCoefficient {
  double a0 = 0.0;
  Vec3 z{};
  Vec3 e{};
};

/// 2^s (rho^2-|z|^2)^s / (s rho^s |rho e - z|^n), without normalization.
inline double a0_unnormalized(const Vec3& z, const Vec3& e, const ProblemGeometry& g) {
  const double r2 = g.rho * g.rho;
  if (norm2(z) >= r2) throw DomainError("a0: z must lie inside the ball");
  return std::pow(2.0, g.s) * std::pow(r2 - norm2(z), g.s) /
         (g.s * std::pow(g.rho, g.s) * std::pow(distance(g.rho * e, z), g.n));
}

/// a0 carrying the same kappa as BallGreen, so that G ~ a0 delta^s holds with constants.
inline ExpansionCoefficient a0_coefficient(const Vec3& z, const Vec3& e, const ProblemGeometry& g,
                                           std::optional<double> kappa = std::nullopt) {
  g.validate();
  const double k = kappa.value_or(green_kappa(g.n, g.s));
  return {k * a0_unnormalized(z, e, g), z, e};
}

/// lim_{t -> 0} t^{n-2s} G(t e, t y) = kappa |e - y|^{2s-n} B(s, n/2 - s), for n > 2s.
inline double interior_blowup_limit(const Vec3& e, const Vec3& y, const ProblemGeometry& g,
                                    std::optional<double> kappa = std::nullopt) {
  g.validate();
  if (!(g.n > 2.0 * g.s))
    throw UnsupportedError("interior blow-up limit requires n > 2s (I(inf) diverges otherwise)");
  const double d = distance(e, y);
  if (d < 1e-14) throw SingularityError("interior blow-up limit: e and y coincide");
  const double k = kappa.value_or(green_kappa(g.n, g.s));
  return k * std::pow(d, 2.0 * g.s - g.n) * beta_fn(g.s, 0.5 * g.n - g.s);
}

/// Recovers kappa(n,s) from the requirement that int_{B_rho} G(0,y) dy equals
/// the torsion value gamma(n,s) rho^{2s} at the centre.
inline double calibrate_kappa(const ProblemGeometry& g, const QuadratureSpec& q = {}) {
  g.validate();
  const GreenProfile prof(g.s, g.n, q);
  const double r2 = g.rho * g.rho;
  auto integrand = [&](double t) {
    if (t < 1e-100 * g.rho) return 0.0;
    return std::pow(t, 2.0 * g.s - 1.0) * prof((r2 - t * t) / (t * t));
  };
  const double unnormalized = sphere_area(g.n) * integrate_endpoint_singular(integrand, 0.0, g.rho, q).value;
  return torsion_constant(g.n, g.s) * std::pow(g.rho, 2.0 * g.s) / unnormalized;
}

}  // namespace fraclab
