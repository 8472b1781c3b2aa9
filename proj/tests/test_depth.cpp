#include <gtest/gtest.h>

#include <random>

#include "setrap/depth.hpp"

namespace {

using namespace setrap;
constexpr double pi = constants::pi;

TrapParams typical() { return TrapParams::from_lab_units(100e6, 100.0, 10.0, 1.0, 100.0); }

double mev(double joule) { return joule / constants::elementary_charge * 1e3; }

TEST(Polynomials, MatchClosedForms) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  for (int n = 2; n <= 7; ++n) {
    const double t0 = 3 * uni(rng);
    const double tw = (0.5 + 0.4 * uni(rng)) * 2 * pi / n;
    const SaddlePolynomials sp = build_polynomials(n, t0, tw);
    MultipoleSpec s;
    s.n = n;
    s.theta0 = t0;
    s.theta_w = tw;
    EXPECT_LE(sp.s_plus.size(), std::size_t(2 * n + 2));
    for (int k = 0; k < 20; ++k) {
      const cplx u{0.8 * uni(rng), 0.8 * uni(rng)};
      const cplx P = detail::poly_eval(sp.p(), u);
      EXPECT_LT(std::abs(P - edge_polynomial(u, n, t0, tw)), 1e-12 * std::abs(P) + 1e-12);
      // f'/f = -S / ((1 - u^2) P), checked against a difference quotient of f.
      const double h = 1e-5;
      const cplx f = reduced_field(u, n, t0, tw);
      const cplx df = (reduced_field(u + h, n, t0, tw) - reduced_field(u - h, n, t0, tw)) / (2 * h);
      const cplx pred = -detail::poly_eval(sp.s(), u) / ((1.0 - u * u) * P);
      EXPECT_LT(std::abs(df / f - pred), 1e-6 * std::abs(pred) + 1e-9);
      // reduced_field is Phi_n' d / V.
      EXPECT_LT(std::abs(f - phi_n_prime_u(u, s)), 1e-12 * std::abs(f) + 1e-15);
    }
  }
}

TEST(Polynomials, QuadrupoleSMinus) {
  // S- = 8 sin(2 theta0) (u^4 - 4u^2 - 1).
  const double t0 = 0.37;
  const SaddlePolynomials sp = build_polynomials(2, t0, 1.0);
  const RealPoly expect{-8.0, 0.0, -32.0, 0.0, 8.0};
  ASSERT_GE(sp.s_minus.size(), expect.size());
  for (std::size_t i = 0; i < sp.s_minus.size(); ++i) {
    const double e = i < expect.size() ? expect[i] * std::sin(2 * t0) : 0.0;
    EXPECT_NEAR(sp.s_minus[i], e, 1e-12) << i;
  }
  // S- does not depend on theta_w.
  EXPECT_EQ(build_polynomials(2, t0, 0.3).s_minus, sp.s_minus);
}

TEST(Polynomials, SymmetryCases) {
  for (int n = 2; n <= 6; ++n) {
    const SaddlePolynomials anti = build_polynomials(n, pi / (2 * n), pi / n);
    for (double c : anti.p_plus) EXPECT_NEAR(c, 0.0, 1e-9);
    for (double c : anti.s_plus) EXPECT_NEAR(c, 0.0, 1e-9);
    const SaddlePolynomials sym = build_polynomials(n, 2 * pi / n, 0.4 / n);
    for (double c : sym.s_minus) EXPECT_NEAR(c, 0.0, 1e-9);
  }
  EXPECT_THROW(build_polynomials(1, 0.0, 1.0), DomainError);
}

TEST(Roots, CompanionSolver) {
  // (u - 1)(u + 2)(u - 3i) = u^3 + (1 - 3i)u^2 + (-2 - 3i)u + 6i.
  const std::vector<cplx> c{{0, 6}, {-2, -3}, {1, -3}, {1, 0}};
  auto r = polynomial_roots(c);
  ASSERT_EQ(r.size(), 3u);
  for (cplx want : {cplx{1, 0}, cplx{-2, 0}, cplx{0, 3}}) {
    double best = 1e9;
    for (cplx x : r) best = std::min(best, std::abs(x - want));
    EXPECT_LT(best, 1e-13);
  }
  // Negligible leading coefficient: root at infinity dropped.
  EXPECT_EQ(polynomial_roots({{-1, 0}, {1, 0}, {1e-17, 0}}).size(), 1u);
}

TEST(Saddle, FourWireSpecial) {
  // Antisymmetric quadrupole: theta_w = pi/2, theta0 = pi/4.
  const SaddleReport r = find_saddle(2, pi / 4, pi / 2);
  EXPECT_NEAR(r.u_saddle.real(), -std::sqrt(2 + std::sqrt(5.0)), 1e-10);
  EXPECT_NEAR(r.u_saddle.imag(), 0.0, 1e-10);
  EXPECT_TRUE(r.is_special);
  EXPECT_NEAR(r.p_over_d.real(), -(std::sqrt(2 + std::sqrt(5.0)) - 1), 1e-10);
  EXPECT_DOUBLE_EQ(r.estimate_chain.steps.front().u.real(), -2.0);
}

TEST(Saddle, OctupoleAntisymmetric) {
  const SaddleReport r = find_saddle(3, pi / 6, pi / 3);
  EXPECT_NEAR(-r.u_saddle.real() / 3, 1.03742, 1e-5);
  EXPECT_TRUE(r.is_special);
}

TEST(Saddle, RootInterleavingRandom) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    const int n = 2 + int(uni(rng) * 7);
    const double t0 = 2 * pi * uni(rng);
    const double tw = (0.01 + 0.98 * uni(rng)) * 2 * pi / n;
    SaddleReport r;
    ASSERT_NO_THROW(r = find_saddle(n, t0, tw)) << n << " " << t0 << " " << tw;
    ASSERT_EQ(r.edges.size(), std::size_t(2 * n));
    ASSERT_EQ(r.axis_roots.size(), std::size_t(2 * n - 1));
    for (int g = 0; g + 1 < 2 * n; ++g) {
      EXPECT_GT(r.axis_roots[g].imag(), r.edges[g]);
      EXPECT_LT(r.axis_roots[g].imag(), r.edges[g + 1]);
    }
    EXPECT_LT(r.u_saddle.real(), 0.0);
    EXPECT_LT(r.residual, 1e-12);
    EXPECT_TRUE(std::isfinite(r.depth_over_u0));
  }
}

TEST(Saddle, HessianSignatureAndGradient) {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    const int n = 2 + int(uni(rng) * 5);
    const double t0 = 2 * pi * uni(rng);
    const double tw = (0.05 + 0.9 * uni(rng)) * 2 * pi / n;
    const SaddleReport r = find_saddle(n, t0, tw);
    const SaddleCheck c = check_saddle(n, t0, tw, r.u_saddle);
    EXPECT_TRUE(c.is_saddle);
    EXPECT_LT(c.gradient, 1e-9);
    // Pseudopotential of an analytic field: traceless Hessian.
    EXPECT_LT(std::abs(c.eig_min + c.eig_max), 1e-4 * (std::abs(c.eig_min) + std::abs(c.eig_max)));
  }
}

TEST(Saddle, IterationFixedPointAndImprovement) {
  for (double t0 : {0.1, 0.9, 2.0}) {
    const SaddleReport r = find_saddle(3, t0, 0.7);
    const SaddleChain one = iterate_saddle(3, t0, 0.7, 1, r.u_saddle);
    EXPECT_LT(std::abs(one.steps[1].u - r.u_saddle), 1e-9 * std::abs(r.u_saddle));
    EXPECT_GT(iterate_saddle(3, t0, 0.7, 0).steps[0].residual, 0.0);
  }
  int better = 0;
  for (int i = 0; i < 100; ++i) {
    const double t0 = 2 * pi * (i + 0.5) / 100;
    const double tw = 0.3 + 1.2 * ((i * 37) % 100) / 100.0;
    const SaddleReport r = find_saddle(2, t0, tw);
    const auto& st = r.estimate_chain.steps;
    if (std::abs(st[1].u - r.u_saddle) < std::abs(st[0].u - r.u_saddle)) ++better;
  }
  EXPECT_GE(better, 95);
}

TEST(Special, TableI) {
  struct Row {
    int n;
    double u;
    double A;
  };
  const Row rows[] = {{2, 1.02909, 0.236068},   {3, 1.03742, -0.266149},  {4, 1.04044, 0.276076},
                      {10, 1.04375, 0.286475},  {20, 1.04422, 0.287935},  {50, 1.04436, 0.288342},
                      {100, 1.04438, 0.288400}, {200, 1.04438, 0.288415}};
  for (const Row& row : rows) {
    const SpecialSaddle s = special_saddle(row.n);
    EXPECT_NEAR(-s.u_bar / row.n, row.u, 1e-5) << row.n;
    EXPECT_NEAR(s.A, row.A, 1e-5) << row.n;
  }
  EXPECT_NEAR(special_saddle(2).A, std::sqrt(5.0) - 2, 1e-13);
  EXPECT_NEAR(special_saddle(2).u_bar, -std::sqrt(2 + std::sqrt(5.0)), 1e-13);
}

TEST(Special, RootOfSMinusAndSPlus) {
  for (int n = 2; n <= 8; ++n) {
    const SpecialSaddle s = special_saddle(n);
    const SaddlePolynomials sp = build_polynomials(n, 0.3, 0.2);
    EXPECT_LT(std::abs(detail::poly_eval(sp.s_minus, s.u_bar)),
              1e-12 * detail::poly_magnitude(sp.s_minus, s.u_bar));
    // A configuration meeting cos(n theta_w/2) = A cos(n theta0) has its
    // saddle at u_bar.
    const double t0 = 0.7 / n;
    const double tw = 2.0 / n * std::acos(s.A * std::cos(n * t0));
    const SaddleReport r = find_saddle(n, t0, tw);
    EXPECT_NEAR(r.u_saddle.real(), s.u_bar, 1e-9 * n);
    EXPECT_NEAR(r.u_saddle.imag(), 0.0, 1e-9 * n);
    EXPECT_TRUE(r.is_special);
  }
}

TEST(Depth, QuadrupoleMaximum) {
  const TrapParams p = typical();
  const double U0 = scale_factors(p).U0;
  EXPECT_NEAR(special_depth_over_u0(2), (5 * std::sqrt(5.0) - 11) / (2 * pi * pi), 1e-12);
  // Every configuration on the condition line gives the same depth.
  for (double t0 : {pi / 2, 0.2, 1.0, 1.3}) {
    const double tw = std::acos((std::sqrt(5.0) - 2) * std::cos(2 * t0));
    const DepthReport d = intrinsic_depth(2, t0, tw, p);
    EXPECT_NEAR(mev(d.depth), 55.8, 0.1) << t0;
    EXPECT_NEAR(d.depth / U0, special_depth_over_u0(2), 1e-9);
  }
  EXPECT_NEAR(mev(crude_estimate_prefactor(p)), 181.0, 1.0);
  const DepthReport d = intrinsic_depth(2, pi / 4, pi / 2, p);
  EXPECT_NEAR(d.crude, crude_estimate_prefactor(p) / 4, 1e-12 * d.crude);
  EXPECT_LT(intrinsic_depth(2, 0.3, 1e-6, p).depth, 1e-9 * U0);
}

TEST(Depth, OptimalCondition) {
  const OptimalCondition four_wire = optimal_condition(2, pi / 4, pi / 2);
  EXPECT_NEAR(four_wire.lhs, 0.0, 1e-15);
  EXPECT_NEAR(four_wire.rhs, 0.0, 1e-15);
  EXPECT_TRUE(four_wire.satisfied);
  const double tw = std::acos(2 - std::sqrt(5.0));
  EXPECT_NEAR(std::cos(tw), -special_saddle(2).A, 1e-13);
  const OptimalCondition fig7a = optimal_condition(2, pi / 2, tw);
  EXPECT_TRUE(fig7a.condition_holds);
  EXPECT_TRUE(fig7a.satisfied);
  const OptimalCondition tilted = optimal_condition(2, 5 * pi / 8, pi / 4);
  EXPECT_FALSE(tilted.condition_holds);
  EXPECT_FALSE(tilted.satisfied);
  EXPECT_THROW(optimal_condition(1, 0.0, 1.0), DomainError);
}

TEST(Depth, GridMaximumOnConditionLine) {
  for (int n : {2, 3}) {
    const double dbar = special_depth_over_u0(n);
    const double period = 2 * pi / n;
    double best = 0.0;
    double best_t0 = 0.0, best_tw = 0.0;
    for (int i = 0; i < 100; ++i) {
      for (int j = 0; j < 100; ++j) {
        const double t0 = period * (i + 0.5) / 100;
        const double tw = period * (j + 0.5) / 100;
        const double v = find_saddle(n, t0, tw, 0).depth_over_u0;
        EXPECT_LE(v, dbar * (1 + 1e-9));
        if (v > best) {
          best = v;
          best_t0 = t0;
          best_tw = tw;
        }
      }
    }
    EXPECT_GT(best, 0.99 * dbar) << n;
    // The grid argmax sits within a cell of the condition line.
    const double A = special_saddle(n).A;
    const double slope = n / 2.0 + n * std::abs(A);
    EXPECT_LT(std::abs(std::cos(n * best_tw / 2) - A * std::cos(n * best_t0)),
              slope * period / 100) << n;
  }
}

TEST(Depth, LandscapeSymmetry) {
  std::mt19937_64 rng(29);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  for (int i = 0; i < 50; ++i) {
    const int n = 2 + int(uni(rng) * 4);
    const double t0 = 2 * pi * uni(rng);
    const double tw = (0.05 + 0.9 * uni(rng)) * 2 * pi / n;
    const double d = find_saddle(n, t0, tw, 0).depth_over_u0;
    EXPECT_NEAR(find_saddle(n, -t0, tw, 0).depth_over_u0, d, 1e-10 * d);
    EXPECT_NEAR(find_saddle(n, t0 + 2 * pi / n, tw, 0).depth_over_u0, d, 1e-10 * d);
  }
}

}  // namespace
