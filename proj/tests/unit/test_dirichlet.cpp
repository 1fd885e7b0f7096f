#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "fraclab/dirichlet.hpp"

using namespace fraclab;

namespace {

const ProblemGeometry kGeoms[] = {{1, 0.25, 1.0}, {1, 0.5, 1.0}, {1, 0.75, 1.0},
                                  {2, 0.5, 1.0},  {3, 0.3, 1.0}, {3, 0.7, 1.0}};

// C^infinity bump of radius eps centred at the origin.
double bump(double r, double eps) {
  const double q = 1.0 - (r / eps) * (r / eps);
  return q > 0.0 ? std::exp(-1.0 / q) : 0.0;
}

}  // namespace

TEST(RadialKernel, MatchesAngularIntegralOfGreen) {
  // oracle: adaptive integral over the angle between re and tw
  QuadratureSpec fine;
  fine.rel_tol = 1e-9;
  for (const auto& g : kGeoms) {
    if (g.n == 1) continue;
    const BallGreen G(g);
    const RadialGreenKernel K(G);
    for (auto [r, t] : {std::pair{0.3, 0.7}, std::pair{0.5, 0.52}, std::pair{0.9, 0.1}, std::pair{0.6, 0.6 + 1e-6}}) {
      const double A = (1 - r * r) * (1 - t * t);
      auto ring = [&](double th) {
        const double sn = std::sin(0.5 * th);
        const double d = std::sqrt((r - t) * (r - t) + 4 * r * t * sn * sn);
        const double gv = d > 0.0 ? G.from_distance(d, A) : 0.0;
        return g.n == 2 ? 2.0 * gv : 2.0 * std::numbers::pi * gv * std::sin(th);
      };
      // geometric panels starting at the peak width |r - t| / sqrt(rt)
      double direct = 0.0;
      double a = 0.0, b = std::abs(r - t) / std::sqrt(r * t);
      while (a < std::numbers::pi) {
        b = std::min(b, std::numbers::pi);
        direct += integrate_adaptive(ring, a, b, fine, false).value;
        a = b;
        b *= 2.0;
      }
      EXPECT_NEAR(K(r, t), direct, 1e-8 * direct) << g.n << " " << g.s << " " << r << " " << t;
    }
  }
}

TEST(Solve, TorsionReproduced) {
  for (const auto& g : kGeoms) {
    const RadialGreenKernel K{BallGreen(g)};
    const SourceTerm one = SourceTerm::constant(1.0, g.rho);
    for (int i = 0; i < 20; ++i) {
      const double r = 0.9 * i / 19.0;
      const double u = radial_solution_value(one, r, K).value;
      const double exact = torsion_value({r, 0, 0}, g);
      EXPECT_NEAR(u, exact, 1e-3 * exact) << g.n << " " << g.s << " r=" << r;
    }
  }
}

TEST(Solve, RayRouteAgreesWithRadialRoute) {
  const ProblemGeometry g{3, 0.7, 1.0};
  const BallGreen G(g);
  const SourceTerm radial = SourceTerm::radial([](double r) { return 1.0 - r * r; }, 0.0, 1.0);
  const SourceTerm general = SourceTerm::general([](const Vec3& y) { return 1.0 - norm2(y); }, 0.0, 1.0);
  for (double r : {0.0, 0.4, 0.8}) {
    const Vec3 x{0, r, 0};
    const double a = solve_at(radial, x, G).value;
    const double b = solve_at(general, x, G).value;
    EXPECT_NEAR(a, b, 1e-3 * a);
  }
}

TEST(Solve, ZeroSourceGivesZeroField) {
  const ProblemGeometry g{2, 0.5, 1.0};
  SolveOptions opt;
  opt.radii = chebyshev_radial_grid(1.0, 8);
  const SampledField u = solve(SourceTerm::constant(0.0, 1.0), g, {}, opt);
  for (const auto& row : u.values)
    for (double v : row) EXPECT_EQ(v, 0.0);
}

TEST(Solve, RadialSourceGivesRadialPositiveField) {
  const ProblemGeometry g{2, 0.5, 1.0};
  SolveOptions opt;
  opt.radii = chebyshev_radial_grid(1.0, 10);
  const SampledField u = solve(SourceTerm::radial([](double r) { return bump(r, 0.3); }, 0.0, 0.3), g, {}, opt);
  EXPECT_EQ(u.max_anisotropy(), 0.0);
  for (const auto& row : u.values)
    for (double v : row) EXPECT_GT(v, 0.0);
}

TEST(Solve, LinearityAndComparison) {
  const ProblemGeometry g{3, 0.3, 1.0};
  SolveOptions opt;
  opt.radii = chebyshev_radial_grid(1.0, 6);
  opt.sphere_degree = 4;
  QuadratureSpec rays;
  rays.sphere_degree = 8;
  auto f = [](const Vec3& y) { return 1.0 + y[0]; };
  auto h = [](const Vec3& y) { return y[1] * y[1]; };
  const auto uf = solve(SourceTerm::general(f, 0.0, 1.0), g, rays, opt);
  const auto uh = solve(SourceTerm::general(h, 0.0, 1.0), g, rays, opt);
  const auto ucomb = solve(SourceTerm::general([&](const Vec3& y) { return 2.0 * f(y) - 3.0 * h(y); }, 0.0, 1.0), g, rays, opt);
  for (std::size_t i = 0; i < uf.radii.size(); ++i)
    for (std::size_t k = 0; k < uf.sphere.size(); ++k) {
      EXPECT_NEAR(ucomb.values[i][k], 2.0 * uf.values[i][k] - 3.0 * uh.values[i][k], 1e-8);
      // 1 + y0 >= y1^2 fails near (-1, 0); f >= 0 and h >= 0 still give ordered fields
      EXPECT_GT(uf.values[i][k], 0.0);
      EXPECT_GT(uh.values[i][k], 0.0);
    }
}

TEST(Solve, ComparisonPrinciple) {
  const ProblemGeometry g{1, 0.25, 1.0};
  const RadialGreenKernel K{BallGreen(g)};
  const SourceTerm big = SourceTerm::radial([](double r) { return 2.0 - r; }, 0.0, 1.0);
  const SourceTerm small = SourceTerm::radial([](double r) { return bump(r, 0.6); }, 0.0, 0.6);
  for (double r : {0.0, 0.3, 0.59, 0.61, 0.95})
    EXPECT_GT(radial_solution_value(big, r, K).value, radial_solution_value(small, r, K).value);
}

TEST(Solve, InvalidSourceRejected) {
  const ProblemGeometry g{1, 0.5, 1.0};
  EXPECT_THROW(solve(SourceTerm::radial([](double) { return 1.0; }, 0.0, 1.5), g), ConfigurationError);
  EXPECT_THROW(solve(SourceTerm::radial([](double) { return 1.0; }, 0.5, 0.2), g), ConfigurationError);
  SolveOptions opt;
  opt.radii = {0.2, 0.1};
  EXPECT_THROW(solve(SourceTerm::constant(1.0, 1.0), g, {}, opt), ConfigurationError);
}

TEST(Profile, ResidualOfBumpSolution) {
  // L u = f away from the edge of the source support
  const double eps = 0.3;
  for (const auto& g : {ProblemGeometry{1, 0.5, 1.0}, ProblemGeometry{3, 0.7, 1.0}}) {
    const SourceTerm f = SourceTerm::radial([eps](double r) { return bump(r, eps); }, 0.0, eps);
    const RadialProfile u = solve_radial(f, g);
    EXPECT_TRUE(u.resolved());
    const auto kernel = AnisoKernel::fractional_laplacian(g.n, g.s);
    const EvaluableFunction uf = u.as_function();
    QuadratureSpec loose;
    loose.rel_tol = 1e-7;
    loose.abs_tol = 1e-9;
    for (double r : {0.0, 0.1, 0.5, 0.8}) {
      const Vec3 x{r, 0, 0};
      const double lu = eval_L(uf, x, kernel, g.s, loose).value;
      EXPECT_NEAR(lu, f(x), 1e-4) << g.n << " r=" << r;
    }
  }
}

TEST(BoundaryQuotient, TorsionClosedForm) {
  for (const auto& g : kGeoms) {
    auto u = [&](const Vec3& x) { return torsion_value(x, g); };
    const auto bq = boundary_quotient(u, {g.rho, 0, 0}, g, default_deltas(g.rho));
    const double exact = torsion_constant(g.n, g.s) * std::pow(2.0 * g.rho, g.s);
    EXPECT_NEAR(bq.extrapolated, exact, 1e-6 * exact);
    EXPECT_FALSE(bq.ill_conditioned);
    EXPECT_EQ(bq.sweep.back().first, 1e-4 * g.rho);
  }
  // gamma(1, 1/2) = 1, so the quotient is sqrt(2) from either end of the interval
  const ProblemGeometry half{1, 0.5, 1.0};
  auto u = [&](const Vec3& x) { return torsion_value(x, half); };
  EXPECT_NEAR(boundary_quotient(u, {-1, 0, 0}, half, default_deltas(1.0)).extrapolated, std::sqrt(2.0), 1e-6);
}

TEST(BoundaryQuotient, ZeroFieldAndBadInput) {
  const ProblemGeometry g{2, 0.5, 2.0};
  auto zero = [](const Vec3&) { return 0.0; };
  const auto bq = boundary_quotient(zero, {0, 2.0, 0}, g, default_deltas(2.0));
  EXPECT_EQ(bq.extrapolated, 0.0);
  EXPECT_THROW(boundary_quotient(zero, {0, 1.0, 0}, g, default_deltas(2.0)), DomainError);
  EXPECT_THROW(boundary_quotient(zero, {0, 2.0, 0}, g, {1e-3, 1e-2}), ConfigurationError);
  EXPECT_THROW(boundary_quotient(zero, {0, 2.0, 0}, g, {1e-3, -1e-4}), ConfigurationError);
}

TEST(BoundaryQuotient, SolutionMatchesExpansionCoefficient) {
  // lim u/delta^s = int a0(y, e) f(y) dy
  const ProblemGeometry g{1, 0.3, 1.0};
  const double eps = 0.4;
  const SourceTerm f = SourceTerm::radial([eps](double r) { return bump(r, eps); }, 0.0, eps);
  const RadialProfile u = solve_radial(f, g);
  const Vec3 e{1, 0, 0};
  auto integrand = [&](double t) {
    return f(Vec3{t, 0, 0}) * (a0_coefficient({t, 0, 0}, e, g).a0 + a0_coefficient({-t, 0, 0}, e, g).a0);
  };
  const double expected = integrate_adaptive(integrand, 0.0, eps, QuadratureSpec{}).value;
  const auto bq = boundary_quotient([&](const Vec3& x) { return u.at(x); }, e, g, default_deltas(1.0));
  EXPECT_NEAR(bq.extrapolated, expected, 1e-4 * expected);
  EXPECT_NEAR(u.quotient_limit(), expected, 1e-6 * expected);
}

TEST(RadialOperator, ReproducesTorsionAndIsPositive) {
  for (const auto& g : kGeoms) {
    const RadialGrid grid = RadialGrid::gauss_legendre(g.rho, 64);
    const RadialOperator op = radial_green_operator(g, grid);
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(op.matrix.rows());
    const Eigen::VectorXd u = op.matrix * ones;
    for (Eigen::Index i = 0; i < u.size(); ++i) {
      const double r = grid.nodes[static_cast<std::size_t>(i)];
      if (r > 0.9 * g.rho) continue;
      const double exact = torsion_value({r, 0, 0}, g);
      EXPECT_NEAR(u(i), exact, 1e-2 * exact);
    }
    EXPECT_GT(op.matrix.minCoeff(), 0.0) << g.n << " " << g.s;
    // symmetric after dividing by the measure
    for (int i = 0; i < 64; i += 7)
      for (int j = 0; j < 64; j += 5) {
        if (i == j) continue;
        const double a = op.matrix(i, j) / op.measure[static_cast<std::size_t>(j)];
        const double b = op.matrix(j, i) / op.measure[static_cast<std::size_t>(i)];
        EXPECT_NEAR(a, b, 1e-12 * std::abs(a));
      }
  }
}

TEST(RadialEigen, HalfLaplacianOnInterval) {
  const ProblemGeometry g{1, 0.5, 1.0};
  const RadialEigenpair ep = radial_eigenpair(g, RadialGrid::gauss_legendre(1.0, 128));
  EXPECT_NEAR(ep.lambda, 1.157773, 0.05 * 1.157773);
  EXPECT_LT(ep.residual, 1e-8);
  double sup = 0.0;
  for (double v : ep.values) {
    EXPECT_GT(v, 0.0);
    sup = std::max(sup, v);
  }
  EXPECT_DOUBLE_EQ(sup, 1.0);
  // the extension agrees with grid values and stays positive up to the boundary
  EXPECT_NEAR(ep(ep.op->grid.nodes[10] + 1e-9), ep.values[10], 1e-6);
  const auto bq = boundary_quotient([&](const Vec3& x) { return ep.at(x); }, {1, 0, 0}, g, default_deltas(1.0));
  EXPECT_GT(bq.extrapolated, 0.1);
  EXPECT_THROW(radial_eigenpair(g, RadialGrid::gauss_legendre(1.0, 32)), ConfigurationError);
}
