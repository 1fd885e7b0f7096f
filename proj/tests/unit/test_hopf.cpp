#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "fraclab/hopf.hpp"

using namespace fraclab;

namespace {

const ProblemGeometry kHopfGeoms[] = {{1, 0.5, 1.0}, {2, 0.5, 1.0}, {3, 0.75, 1.0}};

double torsion_inf(const ProblemGeometry& g, double r) {
  return torsion_constant(g.n, g.s) * std::pow(g.rho * r - 0.25 * r * r, g.s);
}

}  // namespace

TEST(InteriorSphere, BallConfigurationIsValid) {
  const ProblemGeometry g{3, 0.5, 2.0};
  const auto cfg = InteriorSphereConfig::for_ball(g, {0, 1, 1}, 1.0);
  EXPECT_EQ(cfg.radii.size(), 13u);
  EXPECT_DOUBLE_EQ(cfg.radii.back(), std::ldexp(1.0, -12));
  for (double r : cfg.radii) EXPECT_LE(norm(cfg.center(r)) + r, g.rho * (1 + 1e-12));
  auto bad = cfg;
  bad.radii = {0.5, 0.7};
  EXPECT_THROW(bad.validate(g), ConfigurationError);
  bad = cfg;
  bad.nu = {1, 0, 0};
  EXPECT_THROW(bad.validate(g), ConfigurationError);
}

TEST(Cone, MembershipBoundaryAndScaling) {
  const ProblemGeometry g{2, 0.5, 1.0};
  const auto cfg = InteriorSphereConfig::for_ball(g, {1, 0, 0}, 0.5);
  const ConeSpec cone{std::numbers::pi / 4};
  EXPECT_NEAR(cone.c_beta(), std::sqrt(0.5), 1e-15);
  // angle exactly pi/2 - beta = pi/4 to nu = -e1
  const Vec3 edge = cfg.x0 + Vec3{-0.1, 0.1, 0};
  EXPECT_TRUE(cone_contains(edge, cfg, cone));
  // just inside the tangent plane
  EXPECT_FALSE(cone_contains(cfg.x0 + Vec3{-1e-3, 0.1, 0}, cfg, cone));
  EXPECT_FALSE(cone_contains(cfg.x0, cfg, cone));
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-0.3, 0.3);
  for (int i = 0; i < 200; ++i) {
    const Vec3 x = cfg.x0 + Vec3{u(rng), u(rng), 0};
    const bool in = cone_contains(x, cfg, cone);
    for (double t : {0.01, 0.5, 3.0}) EXPECT_EQ(cone_contains(cfg.x0 + t * (x - cfg.x0), cfg, cone), in);
  }
  EXPECT_THROW(ConeSpec{0.0}.validate(), ConfigurationError);
}

TEST(GrowthTable, TorsionGrowsLikeInversePowerOfR) {
  for (const auto& g : kHopfGeoms) {
    const auto cfg = InteriorSphereConfig::for_ball(g, {1, 0, 0}, 0.5, 6);
    auto u = [&](const Vec3& x) { return torsion_value(x, g); };
    const GrowthTable t = growth_table(u, cfg, g.n, g.s);
    EXPECT_FALSE(t.sign_violation);
    ASSERT_EQ(t.rows.size(), 7u);
    for (const auto& row : t.rows) EXPECT_NEAR(row.inf, torsion_inf(g, row.r), 1e-12);
    EXPECT_GE(t.min_growth_ratio(), 1.3) << g.n << " " << g.s;
  }
}

TEST(GrowthTable, RefinementNeverRaisesTheInfimum) {
  const ProblemGeometry g{2, 0.5, 1.0};
  const auto cfg = InteriorSphereConfig::for_ball(g, {0, 1, 0}, 0.5, 4);
  auto u = [](const Vec3& x) { return 2.0 + std::sin(7 * x[0]) * std::cos(5 * x[1]); };
  const GrowthTable coarse = growth_table(u, cfg, g.n, g.s, 1, 256);
  const GrowthTable fine = growth_table(u, cfg, g.n, g.s, 1, 4096);
  for (std::size_t i = 0; i < coarse.rows.size(); ++i) EXPECT_LE(fine.rows[i].inf, coarse.rows[i].inf);
}

TEST(GrowthTable, FastDecayFailsAndSignIsReported) {
  const ProblemGeometry g{1, 0.5, 1.0};
  const auto cfg = InteriorSphereConfig::for_ball(g, {1, 0, 0}, 0.5, 8);
  auto power = [&](const Vec3& x) { return std::pow(distance(x, cfg.x0), 2.0 * g.s + 1.0); };
  const GrowthTable t = growth_table(power, cfg, g.n, g.s);
  EXPECT_LT(t.rows.back().phi, 0.05 * t.rows.front().phi);
  auto negative = [](const Vec3& x) { return x[0] - 0.9; };
  const GrowthTable v = growth_table(negative, cfg, g.n, g.s);
  EXPECT_TRUE(v.sign_violation);
  ASSERT_TRUE(v.violation_point.has_value());
  EXPECT_LT((*v.violation_point)[0], 0.9);
}

TEST(ConeQuotientTest, TorsionNormalApproach) {
  for (const auto& g : kHopfGeoms) {
    const auto cfg = InteriorSphereConfig::for_ball(g, {1, 0, 0}, 0.5);
    auto u = [&](const Vec3& x) { return torsion_value(x, g); };
    const ConeSpec cone{std::numbers::pi / 4};
    const double alpha = torsion_inf(g, 0.5) / 2.0;
    const ConeQuotient cq = cone_quotient(u, cfg, cone, g.s, normal_approach(cfg, g.rho), std::pair{alpha, 0.5});
    const double exact = torsion_constant(g.n, g.s) * std::pow(2.0 * g.rho, g.s);
    EXPECT_NEAR(cq.estimate, exact, 1e-3 * exact);
    ASSERT_TRUE(cq.analytic_bound.has_value());
    EXPECT_LE(*cq.analytic_bound, cq.estimate);
  }
}

TEST(ConeQuotientTest, RejectsPointOutsideConeWithIndex) {
  const ProblemGeometry g{2, 0.5, 1.0};
  const auto cfg = InteriorSphereConfig::for_ball(g, {1, 0, 0}, 0.5);
  auto u = [&](const Vec3& x) { return torsion_value(x, g); };
  std::vector<Vec3> pts = normal_approach(cfg, 1.0);
  pts[3] = cfg.x0 + Vec3{-1e-4, 0.2, 0};
  try {
    cone_quotient(u, cfg, ConeSpec{}, g.s, pts);
    FAIL() << "expected rejection";
  } catch (const DomainError& e) {
    EXPECT_NE(std::string(e.what()).find("point 3"), std::string::npos);
  }
}

TEST(Comparison, TorsionQualifiesAndSpotChecksHold) {
  for (const auto& g : kHopfGeoms) {
    const auto cfg = InteriorSphereConfig::for_ball(g, {1, 0, 0}, 0.5, 6);
    const auto kernel = AnisoKernel::fractional_laplacian(g.n, g.s);
    auto u = [&](const Vec3& x) { return torsion_value(x, g); };
    const GrowthTable table = growth_table(u, cfg, g.n, g.s);
    GrowthCertificate neg;  // u >= 0 everywhere
    neg.c_bar = std::numeric_limits<double>::min();
    neg.delta = g.s;
    neg.x0 = cfg.x0;
    neg.radius = g.rho;
    const auto field = torsion_profile(g.s, g.rho, {0, 0, 0}, torsion_constant(g.n, g.s));
    const ComparisonReport rep = comparison_diagnostics(field, cfg, table, kernel, g.s, neg, 0.0, 0.0, 4);
    ASSERT_TRUE(rep.qualifying_r.has_value());
    EXPECT_EQ(*rep.qualifying_r, 0.5);
    // with V = 0 the margin is exactly Phi/C - C_star
    for (std::size_t i = 0; i < rep.margins.size(); ++i)
      EXPECT_DOUBLE_EQ(rep.margins[i], rep.phi[i] / rep.barrier_C - rep.c_star);
    EXPECT_EQ(rep.spot_checks.size(), 4u);
    EXPECT_GE(rep.min_spot, -1e-6);
  }
}

TEST(Comparison, LargePotentialTermMeansNoQualifyingRadius) {
  const ProblemGeometry g{1, 0.5, 1.0};
  const auto cfg = InteriorSphereConfig::for_ball(g, {1, 0, 0}, 0.5, 3);
  auto u = [&](const Vec3& x) { return torsion_value(x, g); };
  const GrowthTable table = growth_table(u, cfg, g.n, g.s);
  GrowthCertificate neg;
  neg.c_bar = 1e-300;
  neg.delta = 0.5;
  neg.x0 = cfg.x0;
  const ComparisonReport rep =
      comparison_diagnostics(torsion_profile(0.5), cfg, table, AnisoKernel::fractional_laplacian(1, 0.5), 0.5, neg, 1e6, 1.0);
  EXPECT_TRUE(rep.growth_condition_failed());
  EXPECT_TRUE(rep.spot_checks.empty());
}
