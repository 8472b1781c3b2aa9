#pragma once

// Surface-electrode ring traps: an rf annulus R1 < rho < R2 in a grounded
// plane, designed through the angle parameter theta so that the axial field
// vanishes at height d.

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <utility>
#include <vector>

#include "setrap/error.hpp"
#include "setrap/surface_field.hpp"
#include "setrap/units.hpp"

namespace setrap {

struct RingDesign {
  double theta = 0.0;  // in (0, pi/6)
  double d = 0.0;      // m
  double R1 = 0.0;     // m
  double R2 = 0.0;     // m
};

namespace detail {

inline void check_ring_theta(double theta) {
  if (!(theta > 0.0 && theta < constants::pi / 6.0)) {
    throw DomainError("ring theta must lie in (0, pi/6)");
  }
}

inline double ring_radius(double theta_signed, double d) {
  const double s = std::sin(constants::pi / 6.0 + theta_signed);
  return d * std::sqrt(0.75 / (s * s) - 1.0);
}

// Disk on-axis field term R^2 / (R^2 + z^2)^(3/2) and its z derivative.
inline double disk_axial_term(double R, double z) {
  const double s2 = R * R + z * z;
  return R * R / (s2 * std::sqrt(s2));
}

inline double disk_axial_term_dz(double R, double z) {
  const double s2 = R * R + z * z;
  return -3.0 * R * R * z / (s2 * s2 * std::sqrt(s2));
}

// Golden-section maximization of f on [a, b].
template <class F>
double golden_max(F&& f, double a, double b, double tol) {
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - g * (b - a);
  double e = a + g * (b - a);
  double fc = f(c);
  double fe = f(e);
  while (b - a > tol) {
    if (fc > fe) {
      b = e;
      e = c;
      fe = fc;
      c = b - g * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = e;
      fc = fe;
      e = a + g * (b - a);
      fe = f(e);
    }
  }
  return 0.5 * (a + b);
}

}  // namespace detail

// R_{1,2} = d sqrt(3/4 sin^-2(pi/6 +- theta) - 1).
inline std::pair<double, double> ring_radii(double theta, double d) {
  detail::check_ring_theta(theta);
  if (!(d > 0.0) || !std::isfinite(d)) throw DomainError("ring_radii: d must be positive");
  return {detail::ring_radius(theta, d), detail::ring_radius(-theta, d)};
}

inline RingDesign make_ring_design(double theta, double d) {
  const auto [r1, r2] = ring_radii(theta, d);
  return {theta, d, r1, r2};
}

// Inverse design: theta giving outer radius R2 (R2 > d sqrt 2), by bisection.
inline double ring_theta_from_outer_radius(double R2, double d) {
  if (!(d > 0.0) || !(R2 > d * std::sqrt(2.0)) || !std::isfinite(R2)) {
    throw DomainError("ring_theta_from_outer_radius: need R2 > d sqrt(2)");
  }
  double lo = 0.0;
  double hi = constants::pi / 6.0;
  for (int i = 0; i < 200 && hi - lo > 1e-16; ++i) {
    const double mid = 0.5 * (lo + hi);
    // R2 grows monotonically with theta.
    (detail::ring_radius(-mid, d) < R2 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// Inverse design from the inner radius, 0 < R1 < d sqrt 2.
inline double ring_theta_from_inner_radius(double R1, double d) {
  if (!(d > 0.0) || !(R1 > 0.0 && R1 < d * std::sqrt(2.0))) {
    throw DomainError("ring_theta_from_inner_radius: need 0 < R1 < d sqrt(2)");
  }
  double lo = 0.0;
  double hi = constants::pi / 6.0;
  for (int i = 0; i < 200 && hi - lo > 1e-16; ++i) {
    const double mid = 0.5 * (lo + hi);
    (detail::ring_radius(mid, d) > R1 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// q_z / q0 = (sin 5 theta - sin theta) / 3.
inline double ring_strength_factor(double theta) {
  detail::check_ring_theta(theta);
  return (std::sin(5.0 * theta) - std::sin(theta)) / 3.0;
}

// Maximizer of ring_strength_factor: cos^2 theta = (25 + sqrt 145) / 40.
inline double ring_optimal_theta() {
  return std::acos(std::sqrt((25.0 + std::sqrt(145.0)) / 40.0));
}

struct RingStrength {
  double q_z = 0.0;
  SecularFrequency secular;  // adiabatic q_z Omega / sqrt 8
};

inline RingStrength ring_strength(double theta, const TrapParams& params) {
  const double q = scale_factors(params).q0 * ring_strength_factor(theta);
  return {q, secular_frequency(q, params.rf_angular_frequency)};
}

// On-axis field of the annulus, superposed from two disks.
inline double ring_axial_field(const RingDesign& ring, double z, double voltage) {
  if (!(z > 0.0)) throw DomainError("ring_axial_field: z must be positive");
  return voltage * (detail::disk_axial_term(ring.R2, z) - detail::disk_axial_term(ring.R1, z));
}

inline double ring_axial_field_gradient(const RingDesign& ring, double z, double voltage) {
  if (!(z > 0.0)) throw DomainError("ring_axial_field_gradient: z must be positive");
  return voltage *
         (detail::disk_axial_term_dz(ring.R2, z) - detail::disk_axial_term_dz(ring.R1, z));
}

inline PlanarRegion ring_region(const RingDesign& ring, double voltage) {
  return make_annulus({0.0, 0.0}, ring.R1, ring.R2, voltage);
}

struct RingDepth {
  double depth = 0.0;           // J, lower of the axial and 2-D barriers
  double axial_depth = 0.0;     // J
  double axial_saddle_z = 0.0;  // m
  double grid_depth = 0.0;      // J, 2-D flood-fill barrier after refinement
  double saddle_rho = 0.0;      // m, 2-D barrier location
  double saddle_z = 0.0;        // m
  // The 2-D search found no barrier more than 0.1% below the axial one.
  bool escape_axial = true;
};

struct RingDepthOptions {
  int radial_cells = 200;
  int angular_cells = 200;
  bool verify_2d = true;
};

namespace detail {

// |E|^2 in units of (V/d)^2 at (rho, z) in units of d.
inline double ring_field_sq(const PlanarRegion& unit_ring, double rho, double z) {
  const Vec3 e = boundary_field(unit_ring, {rho, 0.0, z});
  return dot(e, e);
}

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  }
  void unite(int a, int b) { parent[find(a)] = find(b); }
};

}  // namespace detail

// Lowest barrier of U_p = U0 |E / (V/d)|^2 around the null at z = d: the axial
// |E_z| maximum above the null, checked against a log-polar flood fill of the
// (rho, z) half-plane.
inline RingDepth ring_depth(const RingDesign& ring, const TrapParams& params,
                            const RingDepthOptions& opt = {}) {
  detail::check_ring_theta(ring.theta);
  const double U0 = scale_factors(params).U0;
  const RingDesign unit{ring.theta, 1.0, ring.R1 / ring.d, ring.R2 / ring.d};

  // Axial: bracket the |E_z| maximum in (1, 50] on a log grid, then refine.
  auto axial = [&](double z) { return std::abs(ring_axial_field(unit, z, 1.0)); };
  const int samples = 400;
  int best = -1;
  double best_val = -1.0;
  std::vector<double> zs(samples);
  for (int i = 0; i < samples; ++i) {
    zs[i] = std::exp(std::log(50.0) * (i + 1) / samples);
    const double v = axial(zs[i]);
    if (v > best_val) {
      best_val = v;
      best = i;
    }
  }
  if (best <= 0 || best >= samples - 1) {
    throw DomainError("ring_depth: no axial field maximum in (d, 50 d]; design invalid");
  }
  const double z_ax = detail::golden_max(axial, zs[best - 1], zs[best + 1], 1e-10);
  RingDepth out;
  out.axial_saddle_z = z_ax * ring.d;
  out.axial_depth = U0 * axial(z_ax) * axial(z_ax);
  out.depth = out.axial_depth;
  out.grid_depth = out.axial_depth;
  out.saddle_rho = 0.0;
  out.saddle_z = out.axial_saddle_z;
  if (!opt.verify_2d) return out;

  // Log-polar grid about the null: r in [1e-3, 50] d, polar angle a in
  // [-pi/2, pi/2] from the electrode direction up to the axis above.
  const PlanarRegion unit_ring = ring_region(unit, 1.0);
  const int nr = opt.radial_cells;
  const int na = opt.angular_cells;
  const double z_floor = 0.02;  // closer to the plane counts as escape
  std::vector<double> u(nr * na);
  std::vector<char> escape(nr * na, 0);
  std::vector<double> rr(nr), aa(na);
  for (int i = 0; i < nr; ++i) rr[i] = 1e-3 * std::pow(5e4, double(i) / (nr - 1));
  for (int j = 0; j < na; ++j) aa[j] = -constants::pi / 2 + constants::pi * j / (na - 1);
  for (int i = 0; i < nr; ++i) {
    for (int j = 0; j < na; ++j) {
      const double rho = rr[i] * std::cos(aa[j]);
      const double z = 1.0 + rr[i] * std::sin(aa[j]);
      const int c = i * na + j;
      if (z < z_floor) {
        escape[c] = 1;
        u[c] = 0.0;
        continue;
      }
      u[c] = detail::ring_field_sq(unit_ring, std::max(rho, 0.0), z);
      if (i == nr - 1) escape[c] = 1;
    }
  }
  std::vector<int> order(nr * na);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) { return u[a] < u[b]; });
  const int center = nr * na;
  const int outside = nr * na + 1;
  detail::UnionFind uf(nr * na + 2);
  std::vector<char> added(nr * na, 0);
  int barrier_cell = -1;
  for (int c : order) {
    added[c] = 1;
    const int i = c / na;
    const int j = c % na;
    if (escape[c]) uf.unite(c, outside);
    if (i == 0) uf.unite(c, center);
    const std::array<std::pair<int, int>, 4> nb{{{i - 1, j}, {i + 1, j}, {i, j - 1}, {i, j + 1}}};
    for (auto [a, b] : nb) {
      if (a < 0 || a >= nr || b < 0 || b >= na) continue;
      if (added[a * na + b]) uf.unite(c, a * na + b);
    }
    if (uf.find(center) == uf.find(outside)) {
      barrier_cell = c;
      break;
    }
  }
  if (barrier_cell < 0) throw DomainError("ring_depth: 2-D search found no escape path");

  const int bi = barrier_cell / na;
  const int bj = barrier_cell % na;
  double rho_s = rr[bi] * std::cos(aa[bj]);
  double z_s = 1.0 + rr[bi] * std::sin(aa[bj]);
  double grid_u = u[barrier_cell];
  const bool on_axis = bj == na - 1 || bj == 0 || rho_s < 1e-6;
  if (on_axis) {
    // The axis is a symmetry line; the refined axial maximum is the saddle.
    rho_s = 0.0;
    z_s = z_ax;
    grid_u = axial(z_ax) * axial(z_ax);
  } else {
    // Newton on grad |E|^2 = 0 with finite-difference derivatives.
    const double h = 1e-5 * std::max(1.0, rho_s);
    auto f = [&](double r, double z) { return detail::ring_field_sq(unit_ring, r, z); };
    for (int it = 0; it < 30; ++it) {
      const double f0 = f(rho_s, z_s);
      const double gr = (f(rho_s + h, z_s) - f(rho_s - h, z_s)) / (2 * h);
      const double gz = (f(rho_s, z_s + h) - f(rho_s, z_s - h)) / (2 * h);
      const double hrr = (f(rho_s + h, z_s) - 2 * f0 + f(rho_s - h, z_s)) / (h * h);
      const double hzz = (f(rho_s, z_s + h) - 2 * f0 + f(rho_s, z_s - h)) / (h * h);
      const double hrz = (f(rho_s + h, z_s + h) - f(rho_s + h, z_s - h) -
                          f(rho_s - h, z_s + h) + f(rho_s - h, z_s - h)) /
                         (4 * h * h);
      const double det = hrr * hzz - hrz * hrz;
      if (det == 0.0) break;
      const double dr = (hzz * gr - hrz * gz) / det;
      const double dz = (hrr * gz - hrz * gr) / det;
      rho_s -= dr;
      z_s -= dz;
      if (std::hypot(dr, dz) < 1e-12) break;
    }
    grid_u = f(rho_s, z_s);
  }
  out.grid_depth = U0 * grid_u;
  out.saddle_rho = rho_s * ring.d;
  out.saddle_z = z_s * ring.d;
  out.escape_axial = out.grid_depth >= out.axial_depth * (1.0 - 1e-3);
  out.depth = std::min(out.axial_depth, out.grid_depth);
  return out;
}

}  // namespace setrap
