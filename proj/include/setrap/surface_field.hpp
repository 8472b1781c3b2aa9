#pragma once

// Potential and field of planar electrode patches in the gapless-plane model.
//
// The electrode plane is z = 0. A patch A at voltage V produces
//
//   V(r) = V * Omega_A(r) / (2 pi)
//   E(r) = V / (2 pi) * \oint_{dA} dr' x (r - r') / |r - r'|^3
//
// where Omega_A is the solid angle A subtends at r and the contour runs
// counterclockwise seen from z > 0. The lower half space is treated as the
// mirror image of the upper one.

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <boost/geometry.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "setrap/error.hpp"
#include "setrap/units.hpp"
#include "setrap/vec.hpp"

namespace setrap {

// Simple polygon, vertices counterclockwise seen from the trap side.
struct Polygon {
  std::vector<Vec2> vertices;
};

struct Disk {
  Vec2 center;
  double radius = 0.0;
};

struct Annulus {
  Vec2 center;
  double inner_radius = 0.0;
  double outer_radius = 0.0;
};

// Translationally symmetric along x, occupying y1 < y < y2. Either edge may be
// infinite, giving a semi-infinite strip.
struct Strip {
  double y1 = 0.0;
  double y2 = 0.0;
};

using Shape = std::variant<Polygon, Disk, Annulus, Strip>;

struct PlanarRegion {
  Shape shape;
  double voltage = 0.0;
};

struct FieldSample {
  Vec3 position;
  double potential = 0.0;
  Vec3 field;
};

namespace detail {

inline double polygon_signed_area(const std::vector<Vec2>& v) {
  double a = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    a += cross(v[i], v[(i + 1) % v.size()]);
  }
  return 0.5 * a;
}

inline int orientation(Vec2 a, Vec2 b, Vec2 c) {
  const double o = cross(b - a, c - a);
  const double scale = std::max({norm(b - a), norm(c - a), 1e-300});
  if (std::abs(o) <= 1e-14 * scale * scale) return 0;
  return o > 0 ? 1 : -1;
}

inline bool on_segment(Vec2 a, Vec2 b, Vec2 p) {
  return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) &&
         std::min(a.y, b.y) <= p.y && p.y <= std::max(a.y, b.y);
}

inline bool segments_intersect(Vec2 p1, Vec2 p2, Vec2 q1, Vec2 q2) {
  const int o1 = orientation(p1, p2, q1);
  const int o2 = orientation(p1, p2, q2);
  const int o3 = orientation(q1, q2, p1);
  const int o4 = orientation(q1, q2, p2);
  if (o1 != o2 && o3 != o4) return true;
  if (o1 == 0 && on_segment(p1, p2, q1)) return true;
  if (o2 == 0 && on_segment(p1, p2, q2)) return true;
  if (o3 == 0 && on_segment(q1, q2, p1)) return true;
  if (o4 == 0 && on_segment(q1, q2, p2)) return true;
  return false;
}

inline double distance_to_segment(Vec3 r, Vec2 a, Vec2 b) {
  const Vec2 ab = b - a;
  const Vec2 ap = Vec2{r.x, r.y} - a;
  const double len2 = dot(ab, ab);
  double t = len2 > 0.0 ? dot(ap, ab) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const Vec2 foot = a + t * ab;
  const Vec2 dxy = Vec2{r.x, r.y} - foot;
  return std::sqrt(dot(dxy, dxy) + r.z * r.z);
}

inline double distance_to_circle(Vec3 r, Vec2 center, double radius) {
  const double s = norm(Vec2{r.x, r.y} - center);
  return std::hypot(s - radius, r.z);
}

inline double region_length_scale(const Shape& shape) {
  constexpr double floor = 1e-6;
  return std::visit(
      [&](const auto& s) -> double {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Polygon>) {
          double xmin = s.vertices[0].x, xmax = xmin;
          double ymin = s.vertices[0].y, ymax = ymin;
          for (const auto& v : s.vertices) {
            xmin = std::min(xmin, v.x);
            xmax = std::max(xmax, v.x);
            ymin = std::min(ymin, v.y);
            ymax = std::max(ymax, v.y);
          }
          return std::max(std::hypot(xmax - xmin, ymax - ymin), floor);
        } else if constexpr (std::is_same_v<T, Disk>) {
          return std::max(s.radius, floor);
        } else if constexpr (std::is_same_v<T, Annulus>) {
          return std::max(s.outer_radius, floor);
        } else {
          const double w = s.y2 - s.y1;
          return std::isfinite(w) ? std::max(w, floor) : floor;
        }
      },
      shape);
}

inline constexpr double singular_guard = 1e-9;
inline constexpr double circle_quadrature_tolerance = 1e-10;
inline constexpr unsigned circle_quadrature_depth = 20;

// Solid angle of a triangle (Van Oosterom-Strackee), positive for an
// observer above a counterclockwise triangle.
inline double triangle_solid_angle(Vec3 r, Vec2 a, Vec2 b, Vec2 c) {
  const Vec3 r1{a.x - r.x, a.y - r.y, -r.z};
  const Vec3 r2{b.x - r.x, b.y - r.y, -r.z};
  const Vec3 r3{c.x - r.x, c.y - r.y, -r.z};
  const double l1 = norm(r1), l2 = norm(r2), l3 = norm(r3);
  const double triple = dot(r1, cross(r2, r3));
  const double den = l1 * l2 * l3 + dot(r1, r2) * l3 + dot(r1, r3) * l2 + dot(r2, r3) * l1;
  return 2.0 * std::atan2(-triple, den);
}

// Straight wire a -> b: \int dl x (r - r') / |r - r'|^3 in closed form.
inline Vec3 segment_kernel(Vec3 r, Vec2 a, Vec2 b) {
  const Vec3 A{a.x - r.x, a.y - r.y, -r.z};
  const Vec3 B{b.x - r.x, b.y - r.y, -r.z};
  const double la = norm(A), lb = norm(B);
  const double den = la * lb * (la * lb + dot(A, B));
  return ((la + lb) / den) * cross(A, B);
}

// Integrals over a counterclockwise circle of radius R whose center lies at
// in-plane distance s from the foot of the observation point, at height
// z > 0. Returned in the frame where the foot point sits on the +x axis
// relative to the center: {solid angle, radial field kernel, z field kernel}.
struct CircleIntegrals {
  double solid_angle = 0.0;
  double radial = 0.0;
  double axial = 0.0;
};

// Adaptive bisection with an absolute tolerance tied to the L1 norm of the
// integrand. Boost's own driver scales tolerance by the integral itself, which
// stalls when the integral cancels to ~0 (points outside a disk near the plane).
inline double gk_adaptive(auto& f, double a, double b, double abs_tol, unsigned depth) {
  using boost::math::quadrature::gauss_kronrod;
  double error = 0.0;
  const double q = gauss_kronrod<double, 31>::integrate(f, a, b, 0, 0.0, &error);
  if (error <= abs_tol || depth == 0) return q;
  const double m = 0.5 * (a + b);
  return gk_adaptive(f, a, m, 0.5 * abs_tol, depth - 1) +
         gk_adaptive(f, m, b, 0.5 * abs_tol, depth - 1);
}

inline double circle_integral(auto&& integrand) {
  using boost::math::quadrature::gauss_kronrod;
  double error = 0.0;
  double l1 = 0.0;
  // Integrands are even in t; integrate over [0, pi] and double.
  const double q = gauss_kronrod<double, 31>::integrate(integrand, 0.0, constants::pi, 0, 0.0,
                                                        &error, &l1);
  if (error <= circle_quadrature_tolerance * l1) return 2.0 * q;
  return 2.0 * gk_adaptive(integrand, 0.0, constants::pi, circle_quadrature_tolerance * l1,
                           circle_quadrature_depth);
}

inline CircleIntegrals circle_solid_angle(double R, double s, double z) {
  CircleIntegrals out;
  out.solid_angle = circle_integral([&](double t) {
    const double w2 = R * R + s * s - 2.0 * R * s * std::cos(t);
    const double sigma = std::sqrt(w2 + z * z);
    return R * (R - s * std::cos(t)) / (sigma * (sigma + z));
  });
  return out;
}

inline CircleIntegrals circle_field(double R, double s, double z) {
  CircleIntegrals out;
  auto inv_cube = [&](double t) {
    const double w2 = R * R + s * s - 2.0 * R * s * std::cos(t);
    const double sigma2 = w2 + z * z;
    return 1.0 / (sigma2 * std::sqrt(sigma2));
  };
  out.radial = circle_integral([&](double t) { return R * z * std::cos(t) * inv_cube(t); });
  out.axial = circle_integral(
      [&](double t) { return R * (R - s * std::cos(t)) * inv_cube(t); });
  return out;
}

// Solid angle (z > 0) of a disk centered at `center`.
inline double disk_solid_angle(Vec3 r, Vec2 center, double radius) {
  const double s = norm(Vec2{r.x, r.y} - center);
  if (s == 0.0) {
    const double sigma = std::hypot(radius, r.z);
    return 2.0 * constants::pi * radius * radius / (sigma * (sigma + r.z));
  }
  return circle_solid_angle(radius, s, r.z).solid_angle;
}

// \oint dr' x (r - r') / |r - r'|^3 over a counterclockwise circle (z > 0).
inline Vec3 disk_edge_kernel(Vec3 r, Vec2 center, double radius) {
  const Vec2 rel = Vec2{r.x, r.y} - center;
  const double s = norm(rel);
  if (s == 0.0) {
    const double sigma2 = radius * radius + r.z * r.z;
    return {0.0, 0.0, 2.0 * constants::pi * radius * radius / (sigma2 * std::sqrt(sigma2))};
  }
  const CircleIntegrals k = circle_field(radius, s, r.z);
  return {k.radial * rel.x / s, k.radial * rel.y / s, k.axial};
}

inline void check_off_plane(Vec3 r, const char* what) {
  if (!std::isfinite(r.x) || !std::isfinite(r.y) || !std::isfinite(r.z)) {
    throw DomainError(std::string(what) + ": evaluation point must be finite");
  }
  if (r.z == 0.0) {
    throw SingularityError(std::string(what) +
                           ": point lies on the electrode plane; use surface_limit");
  }
}

// Distance from r to the region's boundary curve.
inline double boundary_distance(const Shape& shape, Vec3 r) {
  return std::visit(
      [&](const auto& s) -> double {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Polygon>) {
          double d = std::numeric_limits<double>::infinity();
          const auto& v = s.vertices;
          for (std::size_t i = 0; i < v.size(); ++i) {
            d = std::min(d, distance_to_segment(r, v[i], v[(i + 1) % v.size()]));
          }
          return d;
        } else if constexpr (std::is_same_v<T, Disk>) {
          return distance_to_circle(r, s.center, s.radius);
        } else if constexpr (std::is_same_v<T, Annulus>) {
          return std::min(distance_to_circle(r, s.center, s.inner_radius),
                          distance_to_circle(r, s.center, s.outer_radius));
        } else {
          double d = std::numeric_limits<double>::infinity();
          if (std::isfinite(s.y1)) d = std::min(d, std::hypot(r.y - s.y1, r.z));
          if (std::isfinite(s.y2)) d = std::min(d, std::hypot(r.y - s.y2, r.z));
          return d;
        }
      },
      shape);
}

inline void check_off_boundary(const Shape& shape, Vec3 r, const char* what) {
  if (boundary_distance(shape, r) < singular_guard * region_length_scale(shape)) {
    throw SingularityError(std::string(what) +
                           ": evaluation point is on an electrode edge");
  }
}

// Unsigned-in-z solid angle: evaluates at |z|.
inline double shape_solid_angle(const Shape& shape, Vec3 r) {
  r.z = std::abs(r.z);
  return std::visit(
      [&](const auto& s) -> double {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Polygon>) {
          const auto& v = s.vertices;
          double omega = 0.0;
          for (std::size_t i = 1; i + 1 < v.size(); ++i) {
            omega += triangle_solid_angle(r, v[0], v[i], v[i + 1]);
          }
          return omega;
        } else if constexpr (std::is_same_v<T, Disk>) {
          return disk_solid_angle(r, s.center, s.radius);
        } else if constexpr (std::is_same_v<T, Annulus>) {
          return disk_solid_angle(r, s.center, s.outer_radius) -
                 disk_solid_angle(r, s.center, s.inner_radius);
        } else {
          // Omega = 2 * (azimuthal angle subtended in the y-z plane).
          const double dphi = std::atan((s.y2 - r.y) / r.z) - std::atan((s.y1 - r.y) / r.z);
          return 2.0 * dphi;
        }
      },
      shape);
}

// Boundary kernel such that E = V / (2 pi) * kernel, evaluated for z > 0.
inline Vec3 shape_boundary_kernel(const Shape& shape, Vec3 r) {
  return std::visit(
      [&](const auto& s) -> Vec3 {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Polygon>) {
          const auto& v = s.vertices;
          Vec3 k;
          for (std::size_t i = 0; i < v.size(); ++i) {
            k += segment_kernel(r, v[i], v[(i + 1) % v.size()]);
          }
          return k;
        } else if constexpr (std::is_same_v<T, Disk>) {
          return disk_edge_kernel(r, s.center, s.radius);
        } else if constexpr (std::is_same_v<T, Annulus>) {
          return disk_edge_kernel(r, s.center, s.outer_radius) -
                 disk_edge_kernel(r, s.center, s.inner_radius);
        } else {
          // Two infinite wires along x; each contributes 2 (x_hat x rho) / rho^2.
          Vec3 k;
          auto wire = [&](double y_edge, double sign) {
            if (!std::isfinite(y_edge)) return;
            const double dy = r.y - y_edge;
            const double rho2 = dy * dy + r.z * r.z;
            k += (2.0 * sign / rho2) * Vec3{0.0, -r.z, dy};
          };
          // Counterclockwise seen from above: +x along y = y1, -x along y = y2.
          wire(s.y1, 1.0);
          wire(s.y2, -1.0);
          return k;
        }
      },
      shape);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Construction

inline PlanarRegion make_polygon(std::vector<Vec2> vertices, double voltage) {
  if (vertices.size() < 3) throw DomainError("polygon needs at least three vertices");
  for (const auto& v : vertices) {
    if (!std::isfinite(v.x) || !std::isfinite(v.y)) {
      throw DomainError("polygon vertices must be finite");
    }
  }
  if (!(detail::polygon_signed_area(vertices) > 0.0)) {
    throw DomainError("polygon must be counterclockwise with positive area");
  }
  const std::size_t n = vertices.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const bool adjacent = (j == i + 1) || (i == 0 && j == n - 1);
      if (adjacent) continue;
      if (detail::segments_intersect(vertices[i], vertices[(i + 1) % n], vertices[j],
                                     vertices[(j + 1) % n])) {
        throw DomainError("polygon must be simple (edges intersect)");
      }
    }
  }
  return {Polygon{std::move(vertices)}, voltage};
}

inline PlanarRegion make_disk(Vec2 center, double radius, double voltage) {
  if (!(radius > 0.0) || !std::isfinite(radius)) throw DomainError("disk radius must be positive");
  return {Disk{center, radius}, voltage};
}

inline PlanarRegion make_annulus(Vec2 center, double inner_radius, double outer_radius,
                                 double voltage) {
  if (!(inner_radius > 0.0 && inner_radius < outer_radius) || !std::isfinite(outer_radius)) {
    throw DomainError("annulus requires 0 < R1 < R2");
  }
  return {Annulus{center, inner_radius, outer_radius}, voltage};
}

inline PlanarRegion make_strip(double y1, double y2, double voltage) {
  if (!(y1 < y2) || std::isnan(y1) || std::isnan(y2) || y1 == std::numeric_limits<double>::infinity() ||
      y2 == -std::numeric_limits<double>::infinity()) {
    throw DomainError("strip requires y1 < y2");
  }
  return {Strip{y1, y2}, voltage};
}

// ---------------------------------------------------------------------------
// Evaluation

// Solid angle of the region's shape seen from r. The lower half-space is the
// mirror image of the upper one, so this depends on |z|.
inline double solid_angle(const Shape& shape, Vec3 r) {
  detail::check_off_plane(r, "solid_angle");
  return detail::shape_solid_angle(shape, r);
}

inline double solid_angle_potential(const PlanarRegion& region, Vec3 r) {
  detail::check_off_plane(r, "solid_angle_potential");
  return region.voltage * detail::shape_solid_angle(region.shape, r) / (2.0 * constants::pi);
}

inline Vec3 boundary_field(const PlanarRegion& region, Vec3 r) {
  detail::check_off_plane(r, "boundary_field");
  detail::check_off_boundary(region.shape, r, "boundary_field");
  const bool below = r.z < 0.0;
  r.z = std::abs(r.z);
  Vec3 e = (region.voltage / (2.0 * constants::pi)) * detail::shape_boundary_kernel(region.shape, r);
  if (below) e.z = -e.z;
  return e;
}

// Limit of the potential as z -> 0: V inside the region, 0 outside.
inline double surface_limit(const PlanarRegion& region, Vec2 p) {
  const Vec3 r{p.x, p.y, 0.0};
  if (detail::boundary_distance(region.shape, r) <
      detail::singular_guard * detail::region_length_scale(region.shape)) {
    throw SingularityError("surface_limit: point is on an electrode edge");
  }
  const bool inside = std::visit(
      [&](const auto& s) -> bool {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Polygon>) {
          bool in = false;
          const auto& v = s.vertices;
          for (std::size_t i = 0, j = v.size() - 1; i < v.size(); j = i++) {
            if ((v[i].y > p.y) != (v[j].y > p.y) &&
                p.x < (v[j].x - v[i].x) * (p.y - v[i].y) / (v[j].y - v[i].y) + v[i].x) {
              in = !in;
            }
          }
          return in;
        } else if constexpr (std::is_same_v<T, Disk>) {
          return norm(p - s.center) < s.radius;
        } else if constexpr (std::is_same_v<T, Annulus>) {
          const double rho = norm(p - s.center);
          return rho > s.inner_radius && rho < s.outer_radius;
        } else {
          return p.y > s.y1 && p.y < s.y2;
        }
      },
      region.shape);
  return inside ? region.voltage : 0.0;
}

// On-axis field of a disk electrode at voltage V: E_z = V R^2 / (R^2 + z^2)^(3/2).
inline double disk_axial_field(double radius, double z, double voltage) {
  if (!(radius > 0.0)) throw DomainError("disk_axial_field: radius must be positive");
  if (!(z >= 0.0)) throw DomainError("disk_axial_field: z must be non-negative");
  const double s2 = radius * radius + z * z;
  return voltage * radius * radius / (s2 * std::sqrt(s2));
}

inline FieldSample evaluate(const PlanarRegion& region, Vec3 r) {
  return {r, solid_angle_potential(region, r), boundary_field(region, r)};
}

// Linear superposition over electrodes.
inline FieldSample superpose(std::span<const PlanarRegion> regions, Vec3 r) {
  FieldSample out{r, 0.0, {}};
  for (const auto& region : regions) {
    const FieldSample s = evaluate(region, r);
    out.potential += s.potential;
    out.field += s.field;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Geometry validation

namespace detail {

namespace bg = boost::geometry;
using BgPoint = bg::model::d2::point_xy<double>;
using BgPolygon = bg::model::polygon<BgPoint, false>;  // counterclockwise outer ring

inline constexpr int circle_segments = 720;

inline std::vector<BgPoint> circle_ring(Vec2 c, double r, bool clockwise) {
  std::vector<BgPoint> ring;
  ring.reserve(circle_segments + 1);
  for (int i = 0; i <= circle_segments; ++i) {
    const int k = clockwise ? circle_segments - i : i;
    const double t = 2.0 * constants::pi * (k % circle_segments) / circle_segments;
    ring.emplace_back(c.x + r * std::cos(t), c.y + r * std::sin(t));
  }
  return ring;
}

inline BgPolygon to_bg(const Shape& shape, double far) {
  BgPolygon poly;
  std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Polygon>) {
          for (const auto& v : s.vertices) bg::append(poly.outer(), BgPoint(v.x, v.y));
          bg::append(poly.outer(), BgPoint(s.vertices[0].x, s.vertices[0].y));
        } else if constexpr (std::is_same_v<T, Disk>) {
          for (const auto& p : circle_ring(s.center, s.radius, false)) bg::append(poly.outer(), p);
        } else if constexpr (std::is_same_v<T, Annulus>) {
          for (const auto& p : circle_ring(s.center, s.outer_radius, false)) {
            bg::append(poly.outer(), p);
          }
          poly.inners().resize(1);
          for (const auto& p : circle_ring(s.center, s.inner_radius, true)) {
            bg::append(poly.inners()[0], p);
          }
        } else {
          const double lo = std::max(s.y1, -far);
          const double hi = std::min(s.y2, far);
          for (const auto& p : {BgPoint(-far, lo), BgPoint(far, lo), BgPoint(far, hi),
                                BgPoint(-far, hi), BgPoint(-far, lo)}) {
            bg::append(poly.outer(), p);
          }
        }
      },
      shape);
  return poly;
}

}  // namespace detail

// Rejects electrode sets whose interiors overlap. Shared edges are allowed.
inline void check_no_overlap(std::span<const PlanarRegion> regions) {
  double extent = 1e-6;
  for (const auto& r : regions) {
    std::visit(
        [&](const auto& s) {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, Polygon>) {
            for (const auto& v : s.vertices) extent = std::max({extent, std::abs(v.x), std::abs(v.y)});
          } else if constexpr (std::is_same_v<T, Disk>) {
            extent = std::max(extent, norm(s.center) + s.radius);
          } else if constexpr (std::is_same_v<T, Annulus>) {
            extent = std::max(extent, norm(s.center) + s.outer_radius);
          } else {
            if (std::isfinite(s.y1)) extent = std::max(extent, std::abs(s.y1));
            if (std::isfinite(s.y2)) extent = std::max(extent, std::abs(s.y2));
          }
        },
        r.shape);
  }
  const double far = 1e3 * extent;
  std::vector<detail::BgPolygon> polys;
  polys.reserve(regions.size());
  for (const auto& r : regions) polys.push_back(detail::to_bg(r.shape, far));
  const boost::geometry::de9im::mask interiors_meet("T********");
  for (std::size_t i = 0; i < polys.size(); ++i) {
    for (std::size_t j = i + 1; j < polys.size(); ++j) {
      if (boost::geometry::relate(polys[i], polys[j], interiors_meet)) {
        throw DomainError("electrode regions " + std::to_string(i) + " and " +
                          std::to_string(j) + " overlap");
      }
    }
  }
}

}  // namespace setrap
