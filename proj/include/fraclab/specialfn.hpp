#pragma once

#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/special_functions/beta.hpp>

#include "fraclab/errors.hpp"
#include "fraclab/quadrature.hpp"

namespace fraclab {

/// Gamma function on the positive axis.
inline double gamma_fn(double x) {
  if (!(x > 0.0)) throw DomainError("gamma_fn: argument must be positive");
  return std::tgamma(x);
}

/// Euler Beta function B(a, b) = Gamma(a)Gamma(b)/Gamma(a+b), for a, b > 0.
inline double beta_fn(double a, double b) {
  if (!(a > 0.0) || !(b > 0.0)) throw DomainError("beta_fn: arguments must be positive");
  return std::exp(std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b));
}

/// Arguments of the Green profile integral I(r; s, n) = int_0^r t^{s-1} (1+t)^{-n/2} dt.
struct GreenProfileArgs {
  double r = 0.0;
  double s = 0.5;
  int n = 1;

  void validate() const {
    if (!(r >= 0.0)) throw DomainError("green_profile: r must be nonnegative");
    if (!(s > 0.0 && s < 1.0)) throw DomainError("green_profile: s must lie in (0,1)");
    if (n < 1) throw DomainError("green_profile: n must be >= 1");
  }
};

/// Evaluator for I(r; s, n), caching the (s, n) dependent constants.
///
/// Near zero the substitution tau = t^s turns the integrand into the smooth
/// (1 + tau^{1/s})^{-n/2} / s. Beyond r = 1 the n > 2s case is computed as
/// I(inf) - tail with the tail mapped to a finite interval by v = t^{-(n/2-s)};
/// otherwise the remaining piece is integrated in log t.
///
/// With Method::incomplete_beta and n > 2s, t = u/(1-u) gives the
/// non-normalized incomplete Beta B_x(s, n/2 - s), x = r/(1+r), evaluated by
/// Boost; for r > 1 the complement in y = 1/(1+r) keeps full precision.
class GreenProfile {
 public:
  enum class Method { quadrature, incomplete_beta };

  GreenProfile(double s, int n, QuadratureSpec q = {}, Method method = Method::quadrature) : s_(s), n_(n), q_(q) {
    GreenProfileArgs{0.0, s, n}.validate();
    q_.validate();
    tail_exponent_ = 0.5 * n - s;
    at_one_ = head(1.0);
    at_infinity_ = tail_exponent_ > 0.0 ? beta_fn(s, tail_exponent_) : std::numeric_limits<double>::infinity();
    use_beta_ = method == Method::incomplete_beta && tail_exponent_ > 0.0;
  }

  bool uses_incomplete_beta() const { return use_beta_; }

  double s() const { return s_; }
  int n() const { return n_; }

  /// I(inf; s, n) = B(s, n/2 - s); +inf when n <= 2s.
  double at_infinity() const { return at_infinity_; }

  double operator()(double r) const {
    if (!(r >= 0.0)) throw DomainError("green_profile: r must be nonnegative");
    if (r == 0.0) return 0.0;
    if (std::isinf(r)) return at_infinity_;
    if (use_beta_) {
      if (r <= 1.0) return boost::math::beta(s_, tail_exponent_, r / (1.0 + r));
      return at_infinity_ - boost::math::beta(tail_exponent_, s_, 1.0 / (1.0 + r));
    }
    if (r <= 1.0) return head(r);
    if (tail_exponent_ > 0.0) return at_infinity_ - tail(r);
    return at_one_ + log_piece(r);
  }

 private:
  double head(double r) const {
    const double upper = std::pow(r, s_);
    const double inv_s = 1.0 / s_;
    const double half_n = 0.5 * n_;
    auto integrand = [&](double tau) { return std::pow(1.0 + std::pow(tau, inv_s), -half_n); };
    return integrate_adaptive(integrand, 0.0, upper, q_).value / s_;
  }

  // int_r^inf t^{s-1}(1+t)^{-n/2} dt = (1/p) int_0^{r^{-p}} (1 + v^{1/p})^{-n/2} dv, p = n/2 - s.
  double tail(double r) const {
    const double p = tail_exponent_;
    const double upper = std::pow(r, -p);
    const double inv_p = 1.0 / p;
    const double half_n = 0.5 * n_;
    auto integrand = [&](double v) { return std::pow(1.0 + std::pow(v, inv_p), -half_n); };
    return integrate_adaptive(integrand, 0.0, upper, q_).value / p;
  }

  // int_1^r t^{s-1}(1+t)^{-n/2} dt with t = e^w.
  double log_piece(double r) const {
    const double half_n = 0.5 * n_;
    auto integrand = [&](double w) { return std::exp(s_ * w) * std::pow(1.0 + std::exp(w), -half_n); };
    return integrate_adaptive(integrand, 0.0, std::log(r), q_).value;
  }

  double s_;
  int n_;
  QuadratureSpec q_;
  double tail_exponent_ = 0.0;
  double at_one_ = 0.0;
  double at_infinity_ = 0.0;
  bool use_beta_ = false;
};

/// One-shot evaluation of I(r; s, n).
inline double green_profile(const GreenProfileArgs& args, const QuadratureSpec& q = {}) {
  args.validate();
  return GreenProfile(args.s, args.n, q)(args.r);
}

/// Surface measure of the unit sphere S^{n-1}: 2, 2pi, 4pi for n = 1, 2, 3.
inline double sphere_area(int n) {
  return 2.0 * std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n);
}

}  // namespace fraclab
