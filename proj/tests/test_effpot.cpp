#include <gtest/gtest.h>

#include <random>

#include "setrap/effpot.hpp"

namespace {

using namespace setrap;
constexpr double pi = constants::pi;

TrapParams typical() { return TrapParams::from_lab_units(100e6, 100.0, 10.0, 1.0, 100.0); }

MultipoleSpec quad(double theta0, double theta_w) {
  MultipoleSpec s;
  s.n = 2;
  s.theta0 = theta0;
  s.theta_w = theta_w;
  return s;
}

TEST(Ponderomotive, ScaleAndForm) {
  const TrapParams p = typical();
  const double U0 = scale_factors(p).U0;
  const double e = p.rf_peak_voltage / p.ion_plane_distance;
  EXPECT_NEAR(ponderomotive(e, p) / U0, 1.0, 1e-14);
  EXPECT_NEAR(ponderomotive(e, p) / constants::elementary_charge, 6.1, 0.05);
  EXPECT_EQ(ponderomotive(0.0, p), 0.0);
  EXPECT_NEAR(ponderomotive(2 * e, p) / ponderomotive(e, p), 4.0, 1e-14);
}

TEST(UeffGeneral, ReducesAndNullGradient) {
  const TrapParams p = typical();
  const double d = p.ion_plane_distance;
  const RingDesign ring = make_ring_design(0.275, d);
  const std::vector<PlanarRegion> rf{ring_region(ring, p.rf_peak_voltage)};
  const std::vector<PlanarRegion> none;
  const Vec3 r{0.3 * d, -0.2 * d, 1.4 * d};
  EXPECT_NEAR(u_eff_general(r, rf, 0.0, none, p),
              ponderomotive(norm(superpose(rf, r).field), p), 1e-30);

  // At the rf null the gradient is Q times the control gradient.
  const std::vector<PlanarRegion> ctl{
      make_polygon({{1.5 * d, -d}, {3.5 * d, -d}, {3.5 * d, d}, {1.5 * d, d}}, 1.0)};
  const Vec3 null{0.0, 0.0, d};
  const double h = 1e-4 * d;
  for (int axis = 0; axis < 3; ++axis) {
    Vec3 dr{};
    (axis == 0 ? dr.x : axis == 1 ? dr.y : dr.z) = h;
    const double g = (u_eff_general(null + dr, rf, 0.0, ctl, p) -
                      u_eff_general(null - dr, rf, 0.0, ctl, p)) / (2 * h);
    const Vec3 ec = superpose(ctl, null).field;
    const double want = -p.ion_charge * (axis == 0 ? ec.x : axis == 1 ? ec.y : ec.z);
    EXPECT_NEAR(g, want, 1e-6 * norm(ec) * p.ion_charge) << axis;
  }
}

TEST(UeffGeneral, TranslationalCaseMatchesBiasForm) {
  const TrapParams p = typical();
  const double d = p.ion_plane_distance;
  const double U0 = scale_factors(p).U0;
  for (const MultipoleSpec& s0 : {quad(100 * pi / 180, pi / 2), quad(pi, 1.2)}) {
    MultipoleSpec s = s0;
    s.d = d;
    s.V = p.rf_peak_voltage;
    const auto rf = layout_regions(electrode_layout(s), p.rf_peak_voltage);
    const std::vector<PlanarRegion> none;
    BiasedConfig cfg{s, -0.18, p};
    const double v_bias = bias_voltage_for(cfg.v_c, p);
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    for (int i = 0; i < 100; ++i) {
      const cplx c = std::polar(0.9 * std::sqrt(uni(rng)), 2 * pi * uni(rng));
      const cplx pp = mobius_to_plane(c, 1.0) * d;
      const double general =
          u_eff_general({0.0, pp.imag(), d - pp.real()}, rf, v_bias, none, p);
      const double bias = u_eff_bias(pp, cfg);
      const BiasLandscape land(2, s.theta0, s.theta_w, cfg.v_c);
      const double scale = U0 * (land.ponderomotive(c) + std::abs(cfg.v_c * land.beta(c)));
      EXPECT_NEAR(general, bias, 1e-9 * scale) << i;
    }
  }
}

TEST(UeffBias, CentreValueAndZeroBias) {
  const TrapParams p = typical();
  const double U0 = scale_factors(p).U0;
  for (int n = 2; n <= 5; ++n) {
    MultipoleSpec s;
    s.n = n;
    s.theta0 = 0.4;
    s.theta_w = 0.7 * 2 * pi / n;
    const BiasedConfig cfg{s, 0.23, p};
    EXPECT_NEAR(u_eff_bias(0.0, cfg), U0 * 0.23 * n * s.theta_w / (2 * pi), 1e-12 * U0);
    const BiasedConfig off{s, 0.0, p};
    const cplx pt{-0.7 * p.ion_plane_distance, 0.2 * p.ion_plane_distance};
    MultipoleSpec phys = s;
    phys.d = p.ion_plane_distance;
    phys.V = p.rf_peak_voltage;
    EXPECT_NEAR(u_eff_bias(pt, off), ponderomotive(std::abs(phi_n_prime_p(pt, phys)), p),
                1e-12 * U0);
  }
  EXPECT_THROW(u_eff_bias({2.0 * p.ion_plane_distance, 0.0}, BiasedConfig{quad(0.3, 1.0), 0.1, p}),
               DomainError);
}

TEST(BiasLandscape, GradientMatchesDifferences) {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    const int n = 2 + int(uni(rng) * 4);
    const BiasLandscape land(n, 2 * pi * uni(rng), (0.1 + 0.8 * uni(rng)) * 2 * pi / n,
                             uni(rng) - 0.5);
    const cplx w = std::polar(0.9 * std::sqrt(uni(rng)), 2 * pi * uni(rng));
    const double h = 1e-5;
    const cplx fd{(land.value(w + h) - land.value(w - h)) / (2 * h),
                  (land.value(w + cplx{0, h}) - land.value(w - cplx{0, h})) / (2 * h)};
    const cplx g = land.gradient(w);
    EXPECT_LT(std::abs(fd - g), 1e-6 * std::abs(g) + 1e-10) << i;
  }
}

TEST(BiasDepth, ZeroBiasAgreesWithExactSaddle) {
  std::mt19937_64 rng(37);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  for (int i = 0; i < 12; ++i) {
    const int n = 2 + i % 3;
    const double t0 = 2 * pi * uni(rng);
    const double tw = (0.2 + 0.7 * uni(rng)) * 2 * pi / n;
    BiasDepthSolver solver(n, t0, tw, 128);
    const BiasDepth b = solver.depth(0.0);
    const SaddleReport r = find_saddle(n, t0, tw);
    ASSERT_TRUE(b.trapped);
    ASSERT_TRUE(b.saddle_refined) << n << " " << t0 << " " << tw;
    const cplx u = mobius_to_plane(b.saddle.w, 1.0) - 1.0;
    EXPECT_LT(std::abs(u - r.u_saddle), 1e-8) << i;
    EXPECT_NEAR(b.depth_over_u0, r.depth_over_u0, 1e-10 * r.depth_over_u0);
    EXPECT_LT(b.saddle.eig_min, 0.0);
    EXPECT_GT(b.saddle.eig_max, 0.0);
  }
}

TEST(BiasDepth, RefinedSaddlesAreSaddles) {
  BiasDepthSolver solver(2, 100 * pi / 180, pi / 2);
  for (int k = 0; k <= 20; ++k) {
    const double v = -0.5 + 0.05 * k;
    const BiasDepth b = solver.depth(v);
    if (b.saddle_refined) {
      EXPECT_LT(b.saddle.eig_min, 0.0) << v;
      EXPECT_GT(b.saddle.eig_max, 0.0) << v;
      EXPECT_LT(std::abs(solver.landscape().gradient(b.saddle.w)), 1e-9) << v;
    }
    if (b.trapped && b.minimum.converged) {
      EXPECT_GE(b.minimum.eig_min, -1e-9) << v;
    }
  }
  EXPECT_FALSE(solver.depth(-1.0).trapped);
}

TEST(BiasOptimize, PaperConfigurationMagnitudes) {
  const TrapParams p = typical();
  const BiasOptimum o = optimize_bias(quad(100 * pi / 180, pi / 2), p);
  EXPECT_NEAR(std::abs(o.v_c), 0.18, 0.01);
  EXPECT_NEAR(o.ratio_to_dbar, 9.8, 0.2);
  EXPECT_NEAR(std::abs(o.a_over_q2), 0.14, 0.01);
  EXPECT_NEAR(std::abs(o.bias_voltage), 1.1, 0.05);
  EXPECT_GT(o.ratio_to_intrinsic, 1.0);
  EXPECT_TRUE(stability(quad(100 * pi / 180, pi / 2), o.v_c, p).stable);
}

TEST(BiasOptimize, ComplementaryElectrodesFlipSign) {
  // rf on the complementary arcs: beta -> 1 - beta, so v_c -> -v_c.
  const TrapParams p = typical();
  const BiasOptimum a = optimize_bias(quad(100 * pi / 180, pi / 2), p, 128);
  const BiasOptimum b = optimize_bias(quad(10 * pi / 180, pi / 2), p, 128);
  EXPECT_NEAR(a.v_c, -b.v_c, 1e-4);
  EXPECT_NEAR(a.depth_over_u0, b.depth_over_u0, 1e-4 * a.depth_over_u0);
}

TEST(BiasOptimize, FourWireNotWorseThanUnbiased) {
  const BiasOptimum o = optimize_bias(quad(pi / 4, pi / 2), typical(), 128);
  EXPECT_GE(o.ratio_to_intrinsic, 1.0);
}

TEST(BiasOptimize, InvariantUnderOperatingParameters) {
  const MultipoleSpec s = quad(100 * pi / 180, pi / 2);
  const TrapParams base = typical();
  const double v = -0.15;
  BiasDepthSolver solver(2, s.theta0, s.theta_w, 128);
  const double ratio = solver.depth(v).depth_over_u0 / solver.depth(0.0).depth_over_u0;
  const double aq2 = stability(s, v, base).a_over_q2;
  for (int which = 0; which < 3; ++which) {
    for (double f : {3.0, 1.0 / 3.0}) {
      TrapParams p = base;
      if (which == 0) p.rf_angular_frequency *= f;
      if (which == 1) p.ion_mass *= f;
      if (which == 2) p.rf_peak_voltage *= f;
      const double U0 = scale_factors(p).U0;
      // Depth in joules from the physical landscape at the two barrier points.
      auto depth_j = [&](double vc) {
        const BiasDepth b = solver.depth(vc);
        const BiasedConfig cfg{s, vc, p};
        const double d = p.ion_plane_distance;
        return u_eff_bias(mobius_to_plane(b.saddle.w, 1.0) * d, cfg) -
               u_eff_bias(mobius_to_plane(b.minimum.w, 1.0) * d, cfg);
      };
      EXPECT_NEAR(depth_j(v) / depth_j(0.0), ratio, 1e-9 * ratio);
      EXPECT_NEAR(depth_j(0.0) / U0, solver.depth(0.0).depth_over_u0, 1e-9);
      EXPECT_NEAR(stability(s, v, p).a_over_q2, aq2, 1e-12);
    }
  }
}

TEST(Stability, BoundsAndClassification) {
  const TrapParams p = typical();
  const Stability s = stability(quad(0.0, pi / 2), 0.18, p);
  EXPECT_NEAR(s.v_c_bound, 4.0 / (2 * pi), 1e-12);
  EXPECT_NEAR(s.v_c_bound, 0.6366 * std::sin(pi / 2), 1e-4);
  for (double tw : {0.3, 1.0, 2.0}) {
    EXPECT_NEAR(stability(quad(0.0, tw), 0.0, p).v_c_bound, 0.63662 * std::sin(tw), 1e-5);
  }
  EXPECT_NEAR(s.a_over_q2, 0.141, 5e-4);
  EXPECT_NEAR(s.a / (s.q * s.q), s.a_over_q2, 1e-12);
  EXPECT_TRUE(s.stable);
  const Stability zero = stability(quad(0.0, pi / 2), 0.0, p);
  EXPECT_EQ(zero.a, 0.0);
  EXPECT_TRUE(zero.stable);
  TrapParams hot = p;
  hot.rf_angular_frequency /= 3.0;  // q = 9 x 0.156 > 0.7
  EXPECT_FALSE(stability(quad(0.0, pi / 2), 0.0, hot).stable);
  EXPECT_FALSE(stability(quad(0.0, pi / 2), 0.7, p).stable);
  MultipoleSpec oct = quad(0.0, 0.5);
  oct.n = 3;
  EXPECT_THROW(stability(oct, 0.1, p), DomainError);
}

TEST(Contours, GridCoversDisk) {
  const auto rows = ueff_contours(quad(100 * pi / 180, pi / 2), -0.18, 40);
  EXPECT_GT(rows.size(), 1000u);
  for (const auto& r : rows) {
    EXPECT_LT(std::hypot(r.c_re, r.c_im), 1.0);
    EXPECT_TRUE(std::isfinite(r.ueff_over_u0));
  }
  EXPECT_THROW(ueff_contours(quad(0.1, 1.0), 0.0, 1), DomainError);
}

}  // namespace
