#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "fraclab/greenball.hpp"

using namespace fraclab;

namespace {

const ProblemGeometry kGeoms[] = {{1, 0.25, 1.0}, {1, 0.5, 1.0}, {1, 0.75, 1.0},
                                  {2, 0.5, 1.0},  {3, 0.3, 1.0}, {3, 0.7, 1.0}};

// Rotation about an arbitrary axis (Rodrigues).
Vec3 rotate(const Vec3& v, const Vec3& axis, double angle) {
  const Vec3 k = normalized(axis);
  const Vec3 kxv{k[1] * v[2] - k[2] * v[1], k[2] * v[0] - k[0] * v[2], k[0] * v[1] - k[1] * v[0]};
  return std::cos(angle) * v + std::sin(angle) * kxv + (dot(k, v) * (1 - std::cos(angle))) * k;
}

Vec3 random_point(std::mt19937_64& rng, int n, double radius) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  while (true) {
    Vec3 p{0, 0, 0};
    for (int i = 0; i < n; ++i) p[static_cast<std::size_t>(i)] = u(rng);
    if (norm(p) < 1.0) return radius * p;
  }
}

}  // namespace

TEST(R0, ValuesAndErrors) {
  const ProblemGeometry g{3, 0.5, 1.0};
  EXPECT_DOUBLE_EQ(r0({0, 0, 0}, {0.5, 0, 0}, g), 3.0);
  EXPECT_EQ(r0({0.1, 0, 0}, {0, 1.0, 0}, g), 0.0);
  EXPECT_THROW(r0({0.2, 0, 0}, {0.2, 0, 0}, g), SingularityError);
  EXPECT_DOUBLE_EQ(r0({0.1, 0.3, 0}, {-0.4, 0.2, 0.1}, g), r0({-0.4, 0.2, 0.1}, {0.1, 0.3, 0}, g));
  double prev = 0;
  for (double rho0 : {1e-1, 1e-2, 1e-3, 1e-4}) {
    const double v = r0({rho0, 0, 0}, {0, rho0 * 0.5, 0}, g);
    EXPECT_GT(v, prev);
    prev = v;
  }
  EXPECT_GT(prev, 1e7);
}

TEST(Green, LogBranchClosedForm) {
  const ProblemGeometry g{1, 0.5, 1.0};
  const BallGreen G(g);
  const GreenValue v = G({0, 0, 0}, {0.5, 0, 0});
  EXPECT_EQ(v.branch, GreenValue::Branch::logarithmic);
  EXPECT_NEAR(v.value, green_kappa_log() * std::log((1.0 + std::sqrt(0.75)) / 0.5), 1e-14);
  EXPECT_NEAR(green_kappa_log(), 2.0 * green_kappa(1, 0.5), 1e-15);
  // the power representation gives the same function
  const GreenProfile prof(0.5, 1);
  for (double x : {-0.7, 0.0, 0.3})
    for (double z : {-0.2, 0.55, 0.95}) {
      const double power = green_kappa(1, 0.5) * std::pow(std::abs(x - z), 0.0) * prof(r0({x, 0, 0}, {z, 0, 0}, g));
      EXPECT_NEAR(G({x, 0, 0}, {z, 0, 0}).value, power, 1e-10 * power);
    }
}

TEST(Green, VanishesOnAndOutsideBoundary) {
  for (const auto& g : kGeoms) {
    const BallGreen G(g);
    EXPECT_EQ(G({0.1, 0, 0}, {0, g.rho, 0}).value, 0.0);
    EXPECT_EQ(G({0.1, 0, 0}, {1.5, 0, 0}).value, 0.0);
    EXPECT_EQ(G({-2.0, 0, 0}, {0.3, 0, 0}).value, 0.0);
    EXPECT_THROW(G({0.3, 0, 0}, {0.3, 0, 0}), SingularityError);
    double prev = 1e300;
    for (double t : {0.9, 0.99, 0.999, 0.9999}) {
      const double v = G({0.2, 0, 0}, {-t, 0, 0}).value;
      EXPECT_GT(v, 0.0);
      EXPECT_LT(v, prev);
      prev = v;
    }
  }
}

TEST(Green, SymmetricAndRotationInvariant) {
  std::mt19937_64 rng(11);
  for (const auto& g : kGeoms) {
    const BallGreen G(g);
    for (int k = 0; k < 20; ++k) {
      const Vec3 x = random_point(rng, g.n, 0.95);
      const Vec3 z = random_point(rng, g.n, 0.95);
      const double gxz = G(x, z).value;
      EXPECT_GT(gxz, 0.0);
      EXPECT_NEAR(gxz, G(z, x).value, 1e-12 * gxz);
      if (g.n == 3) {
        const Vec3 axis = random_point(rng, 3, 1.0);
        const double ang = 2.0 * k;
        EXPECT_NEAR(gxz, G(rotate(x, axis, ang), rotate(z, axis, ang)).value, 1e-10 * gxz);
      } else if (g.n == 2) {
        EXPECT_NEAR(gxz, G(rotate(x, {0, 0, 1}, 0.3 * k), rotate(z, {0, 0, 1}, 0.3 * k)).value, 1e-10 * gxz);
      } else {
        EXPECT_NEAR(gxz, G(-x, -z).value, 1e-12 * gxz);
      }
    }
  }
}

TEST(Green, Scaling) {
  for (const auto& g1 : kGeoms) {
    if (g1.log_branch()) continue;
    ProblemGeometry g2 = g1;
    g2.rho = 2.5;
    const BallGreen G1(g1), G2(g2);
    const Vec3 x{0.4, 0.3 * (g1.n > 1), 0}, z{-0.5, 0.1 * (g1.n > 1), 0.2 * (g1.n > 2)};
    const double lhs = G2(2.5 * x, 2.5 * z).value;
    const double rhs = std::pow(2.5, 2 * g1.s - g1.n) * G1(x, z).value;
    EXPECT_NEAR(lhs, rhs, 1e-9 * rhs);
  }
}

TEST(Green, DistanceFormsAgree) {
  for (const auto& g : kGeoms) {
    const BallGreen G(g);
    const Vec3 x{0.3, 0, 0}, z{-0.25, 0.1 * (g.n > 1), 0};
    const double d = distance(x, z);
    const double A = (1 - norm2(x)) * (1 - norm2(z));
    EXPECT_NEAR(G.from_distance(d, A), G(x, z).value, 1e-12 * G(x, z).value);
    EXPECT_NEAR(G.times_distance_power(d, A), std::pow(d, g.n - 1) * G(x, z).value, 1e-12 * G(x, z).value);
  }
  // n < 2s: d^{n-1}G stays finite as d -> 0 and matches the asymptote
  const BallGreen G({1, 0.75, 1.0});
  const double lim = G.kappa() * std::pow(0.5, 0.25) / 0.25;
  EXPECT_NEAR(G.times_distance_power(1e-160, 0.5), lim, 1e-9 * lim);
  EXPECT_NEAR(G.times_distance_power(1e-9, 0.5), lim, 1e-3 * lim);
}

TEST(Green, LocalLowerBound) {
  // G >= c |x-z|^{2s-n} near the diagonal on compact interior sets, n > 2s
  for (const auto& g : kGeoms) {
    if (!(g.n > 2 * g.s)) continue;
    const BallGreen G(g);
    double c = 1e300;
    for (double h : {1e-2, 1e-3, 1e-4, 1e-6})
      for (double x : {-0.5, 0.0, 0.5}) c = std::min(c, G({x, 0, 0}, {x + h, 0, 0}).value * std::pow(h, g.n - 2 * g.s));
    EXPECT_GT(c, 0.1 * G.kappa() * G.profile().at_infinity());
  }
}

TEST(A0, PaperValueAndRatio) {
  const ProblemGeometry g{1, 0.5, 1.0};
  EXPECT_NEAR(a0_unnormalized({0, 0, 0}, {1, 0, 0}, g), 2.0 * std::sqrt(2.0), 1e-14);
  for (const auto& gg : kGeoms) {
    const Vec3 e{1, 0, 0};
    const double r = a0_coefficient({-0.5, 0, 0}, e, gg).a0 / a0_coefficient({0.5, 0, 0}, e, gg).a0;
    EXPECT_NEAR(r, std::pow(3.0, -gg.n), 1e-14);
    EXPECT_NEAR(a0_coefficient({0, 0, 0}, e, gg).a0, green_kappa(gg.n, gg.s) * std::pow(2.0, gg.s) / gg.s, 1e-14);
    EXPECT_THROW(a0_coefficient({1.0, 0, 0}, e, gg), DomainError);
  }
}

TEST(A0, BoundaryExpansionFirstOrder) {
  // G((rho-delta)e, z) / (a0 delta^s) - 1 = O(delta), uniformly in z
  for (const auto& g : kGeoms) {
    const BallGreen G(g);
    const Vec3 e = g.n == 1 ? Vec3{1, 0, 0} : normalized(Vec3{1, 1, g.n == 3 ? 1.0 : 0.0});
    std::mt19937_64 rng(3);
    for (int k = 0; k < 5; ++k) {
      const Vec3 z = random_point(rng, g.n, 0.5);
      const double a0 = a0_coefficient(z, e, g).a0;
      double prev = 1.0;
      for (double delta = 1e-2; delta >= 1e-4 * 0.99; delta *= 0.5) {
        const double dev = std::abs(G((g.rho - delta) * e, z).value / (a0 * std::pow(delta, g.s)) - 1.0);
        EXPECT_LT(dev, 20.0 * delta);
        EXPECT_LT(dev, prev / 1.5);
        prev = dev;
      }
    }
  }
}

TEST(Blowup, BetaLimit) {
  const ProblemGeometry g{2, 0.5, 1.0};
  EXPECT_NEAR(interior_blowup_limit({1, 0, 0}, {0, 0, 0}, g), green_kappa(2, 0.5) * std::numbers::pi, 1e-13);
  EXPECT_THROW(interior_blowup_limit({1, 0, 0}, {0, 0, 0}, {1, 0.75, 1.0}), UnsupportedError);
  EXPECT_THROW(interior_blowup_limit({1, 0, 0}, {0, 0, 0}, {1, 0.5, 1.0}), UnsupportedError);
  EXPECT_THROW(interior_blowup_limit({1, 0, 0}, {1, 0, 0}, g), SingularityError);
  // homogeneous of degree 2s - n in |e - y|
  const ProblemGeometry g3{3, 0.3, 1.0};
  const double a = interior_blowup_limit({1, 0, 0}, {0.5, 0, 0}, g3);
  const double b = interior_blowup_limit({1, 0, 0}, {0.75, 0, 0}, g3);
  EXPECT_NEAR(a / b, std::pow(2.0, 2 * 0.3 - 3), 1e-13);
}

TEST(Blowup, MonotoneApproach) {
  for (const auto& g : kGeoms) {
    if (!(g.n > 2 * g.s)) continue;
    const BallGreen G(g);
    const Vec3 e{1, 0, 0}, y{0.8, 0.1 * (g.n > 1), 0};
    const double lim = interior_blowup_limit(e, y, g);
    double prev = 1e300;
    for (double rho0 : {1e-1, 1e-2, 1e-3}) {
      const double v = std::pow(rho0, g.n - 2 * g.s) * G(rho0 * e, rho0 * y).value;
      const double dev = std::abs(v / lim - 1);
      EXPECT_LT(dev, prev);
      prev = dev;
    }
    EXPECT_LT(prev, 1e-2);
  }
}

TEST(Kappa, CalibrationAndTorsionConstant) {
  EXPECT_NEAR(torsion_constant(1, 0.5), 1.0, 1e-14);
  EXPECT_NEAR(torsion_constant(3, 0.5), 0.5, 1e-14);
  for (auto g : kGeoms) {
    EXPECT_NEAR(calibrate_kappa(g) / green_kappa(g.n, g.s), 1.0, 1e-8);
    g.rho = 1.7;
    EXPECT_NEAR(calibrate_kappa(g) / green_kappa(g.n, g.s), 1.0, 1e-8);
  }
}

TEST(Geometry, Validation) {
  EXPECT_THROW((ProblemGeometry{4, 0.5, 1.0}.validate()), UnsupportedError);
  EXPECT_THROW((ProblemGeometry{2, 1.0, 1.0}.validate()), DomainError);
  EXPECT_THROW((ProblemGeometry{2, 0.5, 0.0}.validate()), DomainError);
  EXPECT_TRUE((ProblemGeometry{1, 0.5, 2.0}.log_branch()));
  EXPECT_FALSE((ProblemGeometry{1, 0.25, 2.0}.log_branch()));
}
