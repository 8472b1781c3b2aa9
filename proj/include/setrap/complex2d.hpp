#pragma once

// Two-dimensional electrostatics of translationally symmetric electrodes in
// complex notation.
//
// Coordinates: p = x + i y with the trap centre at the origin and the
// electrode plane at Re(p) = d; the trap region is Re(p) < d. A field E is
// represented by Ebar = E_x + i E_y; its conjugate Ebar* is analytic and
// equals -dPhi/dz for the complex potential Phi, whose real part is the
// physical potential.

#include <cmath>
#include <complex>
#include <span>
#include <vector>

#include "setrap/error.hpp"
#include "setrap/units.hpp"
#include "setrap/vec.hpp"

namespace setrap {

using cplx = std::complex<double>;

// Edge of a strip electrode. q = +1 on the edge at lower ordinate (lower
// cylinder angle), -1 on the upper one.
struct StripEdge {
  cplx position;
  int q = 1;
};

struct MultipoleCoefficients {
  int n = 0;
  cplx alpha;  // leading coefficient of Phi = sum alpha_m z^m, V / m^n
};

namespace detail {

inline constexpr double edge_guard = 1e-12;

inline void check_off_edges(cplx z, std::span<const StripEdge> edges, const char* what) {
  if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) {
    throw DomainError(std::string(what) + ": point must be finite");
  }
  for (const auto& e : edges) {
    const double scale = std::max(1.0, std::abs(e.position));
    if (std::abs(z - e.position) < edge_guard * scale) {
      throw SingularityError(std::string(what) + ": point is on a strip edge");
    }
  }
}

// Principal argument shifted into [0, 2 pi).
inline double arg_0_2pi(cplx w) {
  const double a = std::arg(w);
  return a < 0.0 ? a + 2.0 * constants::pi : a;
}

}  // namespace detail

// Edges of the finite plane strip d + i y, y1 < y < y2.
inline std::vector<StripEdge> plane_strip_edges(double y1, double y2, double d) {
  if (!(y1 < y2) || !std::isfinite(y1) || !std::isfinite(y2)) {
    throw DomainError("plane_strip_edges: need finite y1 < y2");
  }
  return {{cplx{d, y1}, +1}, {cplx{d, y2}, -1}};
}

// Ebar*(z) = (V / i pi) sum q_i / (z - z_i); analytic.
inline cplx strip_field_conj(cplx z, std::span<const StripEdge> edges, double voltage) {
  detail::check_off_edges(z, edges, "strip_field");
  cplx sum = 0.0;
  for (const auto& e : edges) sum += double(e.q) / (z - e.position);
  return voltage / cplx{0.0, constants::pi} * sum;
}

// Ebar = E_x + i E_y.
inline cplx strip_field(cplx z, std::span<const StripEdge> edges, double voltage) {
  return std::conj(strip_field_conj(z, edges, voltage));
}

// Vector form: E = (V/pi) sum q_i zhat x (r - r_i) / |r - r_i|^2, zhat along
// the translation axis.
inline Vec2 strip_field_vector(Vec2 r, std::span<const StripEdge> edges, double voltage) {
  detail::check_off_edges({r.x, r.y}, edges, "strip_field_vector");
  Vec2 e{};
  for (const auto& edge : edges) {
    const Vec2 rel{r.x - edge.position.real(), r.y - edge.position.imag()};
    const double r2 = dot(rel, rel);
    e = e + (edge.q * voltage / (constants::pi * r2)) * Vec2{-rel.y, rel.x};
  }
  return e;
}

// Phi(z) = (V i / pi) sum q_i ln(z - z_i) with the constant fixed so that
// Re(Phi) -> 0 far from the electrodes and Re(Phi) is the physical potential
// in the trap region Re(z) < d. A +1 edge followed in the list by a -1 edge
// at higher ordinate bounds a finite strip; any other edge is the end of a
// semi-infinite strip.
inline cplx strip_potential(cplx z, std::span<const StripEdge> edges, double voltage) {
  detail::check_off_edges(z, edges, "strip_potential");
  const double pi = constants::pi;
  double re = 0.0;
  double im = 0.0;
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const auto& e = edges[i];
    im += voltage / pi * e.q * std::log(std::abs(z - e.position));
    if (e.q == +1 && i + 1 < edges.size() && edges[i + 1].q == -1 &&
        edges[i + 1].position.imag() > e.position.imag()) {
      const auto& m = edges[i + 1];
      im += voltage / pi * m.q * std::log(std::abs(z - m.position));
      re += -voltage / pi * std::arg((z - e.position) / (z - m.position));
      ++i;
    } else if (e.q == +1) {
      // Electrode from this edge to +i infinity.
      re += voltage * (1.5 - detail::arg_0_2pi(z - e.position) / pi);
    } else {
      // Electrode from -i infinity up to this edge.
      re += voltage * (detail::arg_0_2pi(z - e.position) / pi - 0.5);
    }
  }
  return {re, im};
}

// ---------------------------------------------------------------------------
// Cylinder <-> plane

// p = 2 d c / (d + c). Fixes 0 and d; maps |c| = d onto Re(p) = d.
inline cplx mobius_to_plane(cplx c, double d) {
  if (std::abs(d + c) < 1e-15 * d) throw DomainError("mobius_to_plane: c = -d is a pole");
  return 2.0 * d * c / (d + c);
}

// c = d p / (2 d - p).
inline cplx mobius_to_cylinder(cplx p, double d) {
  if (std::abs(2.0 * d - p) < 1e-15 * d) throw DomainError("mobius_to_cylinder: p = 2d is a pole");
  return d * p / (2.0 * d - p);
}

// dp/dc = 2 d^2 / (d + c)^2; 2 at the origin.
inline cplx mobius_derivative(cplx c, double d) {
  if (std::abs(d + c) < 1e-15 * d) throw DomainError("mobius_derivative: c = -d is a pole");
  return 2.0 * d * d / ((d + c) * (d + c));
}

// Image of the cylinder point d e^{i phi}: (d, d tan(phi / 2)).
inline Vec2 edge_map(double phi, double d) {
  const double half = std::remainder(phi, 2.0 * constants::pi) / 2.0;
  if (std::abs(std::cos(half)) < 1e-12) {
    throw DomainError("edge_map: phi = pi maps to infinity");
  }
  return {d, d * std::tan(half)};
}

// Physical potential of an electrode arc phi_a < phi < phi_a + width on the
// grounded cylinder |c| = d, at interior point c, relative to the arc voltage.
// (1/pi) Arg[(c - c_b) / (c - c_a)] - width / (2 pi), continuous in the disk.
inline double arc_harmonic_measure(cplx c, double d, double phi_a, double width) {
  const cplx ca = std::polar(d, phi_a);
  const cplx cb = std::polar(d, phi_a + width);
  return detail::arg_0_2pi((c - cb) / (c - ca)) / constants::pi -
         width / (2.0 * constants::pi);
}

// Complex potential of one cylinder arc with Re equal to the physical
// potential inside the disk.
inline cplx cylinder_arc_potential(cplx c, double d, double phi_a, double width,
                                   double voltage) {
  const cplx ca = std::polar(d, phi_a);
  const cplx cb = std::polar(d, phi_a + width);
  const StripEdge edges[2] = {{ca, +1}, {cb, -1}};
  detail::check_off_edges(c, edges, "cylinder_arc_potential");
  const double im = voltage / constants::pi * std::log(std::abs((c - ca) / (c - cb)));
  return {voltage * arc_harmonic_measure(c, d, phi_a, width), im};
}

// ---------------------------------------------------------------------------
// Multipoles

// alpha_w = alpha (dz/dw)^n for a conformal map fixing the origin.
inline MultipoleCoefficients multipole_transport(const MultipoleCoefficients& a,
                                                 cplx map_derivative_at_origin) {
  if (map_derivative_at_origin == cplx{0.0}) {
    throw DomainError("multipole_transport: map derivative vanishes (degenerate map)");
  }
  return {a.n, a.alpha * std::pow(map_derivative_at_origin, a.n)};
}

// Coefficients alpha_0..alpha_max_order of f(z) = sum alpha_m z^m from
// samples on the circle |z| = radius (trapezoidal rule, exact for
// polynomials of degree < samples).
template <class F>
std::vector<cplx> multipole_series_fit(F&& f, double radius, int max_order, int samples = 256) {
  if (!(radius > 0.0) || max_order < 0 || samples <= max_order) {
    throw DomainError("multipole_series_fit: bad radius, order or sample count");
  }
  std::vector<cplx> values(samples);
  for (int k = 0; k < samples; ++k) {
    values[k] = f(std::polar(radius, 2.0 * constants::pi * k / samples));
  }
  std::vector<cplx> out(max_order + 1);
  for (int m = 0; m <= max_order; ++m) {
    cplx acc = 0.0;
    for (int k = 0; k < samples; ++k) {
      acc += values[k] * std::polar(1.0, -2.0 * constants::pi * m * k / samples);
    }
    out[m] = acc / double(samples) / std::pow(radius, m);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Source-free check

struct PolyaCheck {
  // max over points of |dEbar/dz| / (|dEbar/dz| + |dEbar/dzbar|); 0 for an
  // electrostatic field, O(1) otherwise.
  double residual = 0.0;
  bool consistent = false;
};

// field(z) returns Ebar = E_x + i E_y. Wirtinger derivatives by central
// differences with step h.
template <class F>
PolyaCheck polya_consistency(F&& field, std::span<const cplx> points, double h,
                             double tolerance = 1e-6) {
  PolyaCheck out;
  for (cplx z : points) {
    const cplx dx = (field(z + h) - field(z - h)) / (2.0 * h);
    const cplx dy = (field(z + cplx{0.0, h}) - field(z - cplx{0.0, h})) / (2.0 * h);
    const cplx dz = 0.5 * (dx - cplx{0.0, 1.0} * dy);
    const cplx dzbar = 0.5 * (dx + cplx{0.0, 1.0} * dy);
    const double denom = std::abs(dz) + std::abs(dzbar);
    if (denom == 0.0) continue;
    out.residual = std::max(out.residual, std::abs(dz) / denom);
  }
  out.consistent = out.residual < tolerance;
  return out;
}

}  // namespace setrap
