#pragma once

// Fourier-space description of surface-electrode potentials.
//
// Convention: V~(k) = \int e^{-i k.r} V(x, y) dx dy. Above the plane each
// component propagates as e^{-|k| z}.

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/bessel.hpp>
#include <cmath>
#include <complex>
#include <variant>

#include "setrap/error.hpp"
#include "setrap/surface_field.hpp"

namespace setrap {

using cplx = std::complex<double>;

struct SpatialFrequency {
  double kx = 0.0;  // rad/m
  double ky = 0.0;

  double magnitude() const { return std::hypot(kx, ky); }
};

inline cplx propagate(cplx surface_value, SpatialFrequency k, double z) {
  return std::exp(-k.magnitude() * std::abs(z)) * surface_value;
}

namespace detail {

inline constexpr double fourier_series_threshold = 1e-6;

// (1 - e^{-i phi}) / (i phi), with a series branch near phi = 0.
inline cplx one_minus_exp_over_iphi(double phi) {
  if (std::abs(phi) < fourier_series_threshold) {
    const cplx iphi{0.0, phi};
    return 1.0 - iphi / 2.0 + iphi * iphi / 6.0;
  }
  // 1 - e^{-i phi} = 2 sin^2(phi/2) + i sin(phi), free of cancellation.
  const double h = std::sin(0.5 * phi);
  return cplx{2.0 * h * h, std::sin(phi)} / cplx{0.0, phi};
}

// \int_seg e^{-i k.r} (k x dr)_z along the straight segment a -> b.
inline cplx segment_transform(SpatialFrequency k, Vec2 a, Vec2 b) {
  const Vec2 delta = b - a;
  const double phi = k.kx * delta.x + k.ky * delta.y;
  const double kxd = k.kx * delta.y - k.ky * delta.x;
  return std::exp(cplx{0.0, -(k.kx * a.x + k.ky * a.y)}) * kxd * one_minus_exp_over_iphi(phi);
}

inline cplx shift_phase(SpatialFrequency k, Vec2 t) {
  return std::exp(cplx{0.0, -(k.kx * t.x + k.ky * t.y)});
}

// Below this |k| L the boundary sum loses ~eps/(|k| L) to cancellation and
// the area integral is done by quadrature instead.
inline constexpr double fourier_low_k = 1e-2;

// \int over the triangle (a, b, c) of e^{-ik.r}, collapsed Gauss-Legendre.
inline cplx triangle_transform_quadrature(SpatialFrequency k, Vec2 a, Vec2 b, Vec2 c) {
  using boost::math::quadrature::gauss;
  const Vec2 e1 = b - a;
  const Vec2 e2 = c - a;
  const double jac = cross(e1, e2);
  auto over = [&](bool imag) {
    return gauss<double, 10>::integrate(
        [&](double s) {
          return gauss<double, 10>::integrate(
              [&](double t) {
                // Duffy map of the unit square onto the unit triangle.
                const Vec2 r = a + (s * (1.0 - t)) * e1 + (s * t) * e2;
                const double ph = -(k.kx * r.x + k.ky * r.y);
                return s * (imag ? std::sin(ph) : std::cos(ph));
              },
              0.0, 1.0);
        },
        0.0, 1.0);
  };
  return jac * cplx{over(false), over(true)};
}

inline void check_finite(SpatialFrequency k) {
  if (!std::isfinite(k.kx) || !std::isfinite(k.ky)) {
    throw DomainError("spatial frequency must be finite");
  }
}

}  // namespace detail

// Transform of a polygonal electrode through its boundary integral,
// V (i/k^2) z.\oint e^{-ik.r} k x dr. At k = 0 returns V * Area.
inline cplx surface_transform_polygon(const PlanarRegion& region, SpatialFrequency k) {
  detail::check_finite(k);
  const auto* poly = std::get_if<Polygon>(&region.shape);
  if (!poly) throw DomainError("surface_transform_polygon: region is not a polygon");
  const auto& v = poly->vertices;
  const double k2 = k.kx * k.kx + k.ky * k.ky;
  if (k2 == 0.0) return region.voltage * detail::polygon_signed_area(v);
  double extent = 0.0;
  for (const auto& p : v) extent = std::max(extent, norm(p - v[0]));
  if (std::sqrt(k2) * extent < detail::fourier_low_k) {
    cplx area = 0.0;
    for (std::size_t i = 1; i + 1 < v.size(); ++i) {
      area += detail::triangle_transform_quadrature(k, v[0], v[i], v[i + 1]);
    }
    return region.voltage * area;
  }
  cplx sum = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    sum += detail::segment_transform(k, v[i], v[(i + 1) % v.size()]);
  }
  return region.voltage * cplx{0.0, 1.0 / k2} * sum;
}

// Disk of radius R: 2 pi R V J1(kR) / k, shifted to its center.
inline cplx surface_transform_disk(Vec2 center, double radius, double voltage,
                                   SpatialFrequency k) {
  detail::check_finite(k);
  const double km = k.magnitude();
  const double radial = km == 0.0 ? constants::pi * radius * radius
                                  : 2.0 * constants::pi * radius *
                                        boost::math::cyl_bessel_j(1, km * radius) / km;
  return voltage * radial * detail::shift_phase(k, center);
}

// Any finite-area region. Strips have no 2-D transform; use strip_transform.
inline cplx surface_transform(const PlanarRegion& region, SpatialFrequency k) {
  return std::visit(
      [&](const auto& s) -> cplx {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Polygon>) {
          return surface_transform_polygon(region, k);
        } else if constexpr (std::is_same_v<T, Disk>) {
          return surface_transform_disk(s.center, s.radius, region.voltage, k);
        } else if constexpr (std::is_same_v<T, Annulus>) {
          return surface_transform_disk(s.center, s.outer_radius, region.voltage, k) -
                 surface_transform_disk(s.center, s.inner_radius, region.voltage, k);
        } else {
          throw DomainError("surface_transform: strips are translationally invariant; use strip_transform");
        }
      },
      region.shape);
}

// 1-D transform across a finite strip y1 < y < y2:
// V (e^{-i ky y1} - e^{-i ky y2}) / (i ky), V (y2 - y1) at ky = 0.
inline cplx strip_transform(double y1, double y2, double voltage, double ky) {
  if (!std::isfinite(y1) || !std::isfinite(y2) || !(y1 < y2)) {
    throw DomainError("strip_transform: needs a finite strip y1 < y2");
  }
  return voltage * std::exp(cplx{0.0, -ky * y1}) * (y2 - y1) *
         detail::one_minus_exp_over_iphi(ky * (y2 - y1));
}

// Potential at (y, z) from the propagated 1-D strip spectrum,
// (1/2 pi) \int V~(k) e^{-|k| z} e^{i k y} dk, folded onto k > 0.
inline double strip_potential_from_spectrum(double y1, double y2, double voltage, double y,
                                            double z) {
  if (!(z > 0.0)) throw DomainError("strip_potential_from_spectrum: z must be positive");
  auto integrand = [&](double k) {
    const cplx v = strip_transform(y1, y2, voltage, k);
    return (v * std::exp(cplx{-k * z, k * y})).real();
  };
  // e^{-k z} < e^{-60} beyond the cutoff.
  const double k_max = 60.0 / z;
  double error = 0.0;
  const double integral = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      integrand, 0.0, k_max, 20, 1e-12, &error);
  return integral / constants::pi;
}

}  // namespace setrap
