#pragma once

// Surface-electrode multipole guides parametrized by (n, theta0, theta_w):
// n rf strips whose images on the grounded cylinder |c| = d are the arcs
// theta0 - theta_w/2 + 2 pi k/n < phi < theta0 + theta_w/2 + 2 pi k/n.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <vector>

#include "setrap/complex2d.hpp"
#include "setrap/error.hpp"
#include "setrap/surface_field.hpp"
#include "setrap/units.hpp"

namespace setrap {

struct MultipoleSpec {
  int n = 2;
  double theta0 = 0.0;   // rad
  double theta_w = 0.0;  // rad, in (0, 2 pi / n)
  double d = 1.0;        // m
  double V = 1.0;        // V

  void validate() const {
    if (n < 1) throw DomainError("multipole order n must be >= 1");
    if (!std::isfinite(theta0)) throw DomainError("theta0 must be finite");
    if (!(theta_w > 0.0 && theta_w < 2.0 * constants::pi / n)) {
      throw DomainError("theta_w must lie in (0, 2 pi / n); strips would overlap");
    }
    if (!(d > 0.0) || !std::isfinite(d)) throw DomainError("d must be positive");
    if (!std::isfinite(V)) throw DomainError("V must be finite");
  }

  // n = 1 is accepted but the zero-order structure the depth analysis relies
  // on degenerates.
  bool order_warning() const { return n == 1; }
};

struct CylinderArc {
  double phi_a = 0.0;  // lower edge angle, in (-pi, pi)
  double phi_b = 0.0;  // phi_a + theta_w; may exceed pi
};

// Strip d + i y, y1 < y < y2, in the plane picture. One of y1, y2 is infinite
// for the two halves of an arc containing phi = pi.
struct PlaneStrip {
  double y1 = 0.0;
  double y2 = 0.0;
};

struct MultipoleLayout {
  std::vector<CylinderArc> arcs;    // n arcs, in k order
  std::vector<PlaneStrip> strips;   // sorted by y1
  std::vector<StripEdge> edges;     // plane edges, ordered for strip_potential
  bool has_semi_infinite = false;
};

namespace detail {

inline double wrap_angle(double phi) {
  // Into (-pi, pi].
  double r = std::remainder(phi, 2.0 * constants::pi);
  if (r <= -constants::pi) r += 2.0 * constants::pi;
  return r;
}

inline constexpr double pi_edge_tolerance = 1e-12;

}  // namespace detail

inline MultipoleLayout electrode_layout(const MultipoleSpec& spec) {
  spec.validate();
  const double pi = constants::pi;
  const double d = spec.d;
  MultipoleLayout out;
  for (int k = 0; k < spec.n; ++k) {
    const double a = detail::wrap_angle(spec.theta0 - spec.theta_w / 2 + 2.0 * pi * k / spec.n);
    const double b = a + spec.theta_w;
    if (std::abs(a - pi) < detail::pi_edge_tolerance ||
        std::abs(detail::wrap_angle(b) - pi) < detail::pi_edge_tolerance) {
      throw DomainError("electrode_layout: an edge lies at phi = pi (maps to infinity)");
    }
    out.arcs.push_back({a, b});
    const double ya = edge_map(a, d).y;
    const double yb = edge_map(b, d).y;
    if (b > pi) {
      out.strips.push_back({ya, std::numeric_limits<double>::infinity()});
      out.strips.push_back({-std::numeric_limits<double>::infinity(), yb});
      out.has_semi_infinite = true;
    } else {
      out.strips.push_back({ya, yb});
    }
  }
  std::sort(out.strips.begin(), out.strips.end(),
            [](const PlaneStrip& l, const PlaneStrip& r) { return l.y1 < r.y1; });
  for (const auto& s : out.strips) {
    if (std::isfinite(s.y1)) out.edges.push_back({cplx{d, s.y1}, +1});
    if (std::isfinite(s.y2)) out.edges.push_back({cplx{d, s.y2}, -1});
  }
  return out;
}

// Strip regions at the rf voltage for the 3-D surface-field evaluators.
inline std::vector<PlanarRegion> layout_regions(const MultipoleLayout& layout, double voltage) {
  std::vector<PlanarRegion> out;
  for (const auto& s : layout.strips) out.push_back(make_strip(s.y1, s.y2, voltage));
  return out;
}

// Phi_n(c) = (i V / pi) ln[((e^{-i(theta0 - theta_w/2)} c)^n - d^n) /
//                          ((e^{-i(theta0 + theta_w/2)} c)^n - d^n)].
inline cplx phi_n(cplx c, const MultipoleSpec& spec) {
  spec.validate();
  const double n = spec.n;
  const double dn = std::pow(spec.d, spec.n);
  const cplx cn = std::pow(c, spec.n);
  const cplx num = std::polar(1.0, -n * (spec.theta0 - spec.theta_w / 2)) * cn - dn;
  const cplx den = std::polar(1.0, -n * (spec.theta0 + spec.theta_w / 2)) * cn - dn;
  if (std::abs(num) < 1e-14 * dn || std::abs(den) < 1e-14 * dn) {
    throw SingularityError("phi_n: point is on an electrode edge");
  }
  return cplx{0.0, spec.V / constants::pi} * std::log(num / den);
}

// Physical potential inside the cylinder: Re Phi_n + V n theta_w / (2 pi),
// the constant fixed by the mean-value property at the centre.
inline double multipole_potential(cplx c, const MultipoleSpec& spec) {
  return phi_n(c, spec).real() + spec.V * spec.n * spec.theta_w / (2.0 * constants::pi);
}

// Sum of per-arc harmonic measures; independent route to the same potential.
inline double multipole_potential_from_arcs(cplx c, const MultipoleSpec& spec) {
  const MultipoleLayout layout = electrode_layout(spec);
  double sum = 0.0;
  for (const auto& arc : layout.arcs) {
    sum += arc_harmonic_measure(c, spec.d, arc.phi_a, spec.theta_w);
  }
  return spec.V * sum;
}

// dPhi_n/dc.
inline cplx phi_n_prime_c(cplx c, const MultipoleSpec& spec) {
  spec.validate();
  const int n = spec.n;
  const double dn = std::pow(spec.d, n);
  const cplx a = std::polar(1.0, -n * (spec.theta0 - spec.theta_w / 2));
  const cplx b = std::polar(1.0, -n * (spec.theta0 + spec.theta_w / 2));
  const cplx cn = std::pow(c, n);
  return cplx{0.0, spec.V / constants::pi} * double(n) * std::pow(c, n - 1) *
         (a / (a * cn - dn) - b / (b * cn - dn));
}

// P(u) = P+(u) + i P-(u), u = p/d - 1; its roots are the mapped edges.
inline cplx edge_polynomial(cplx u, int n, double theta0, double theta_w) {
  const cplx lo = std::pow(1.0 - u, 2 * n);
  const cplx hi = std::pow(1.0 + u, 2 * n);
  const cplx pp = std::cos(n * theta0) * (lo + hi) -
                  2.0 * std::pow(1.0 - u * u, n) * std::cos(n * theta_w / 2);
  const cplx pm = std::sin(n * theta0) * (lo - hi);
  return pp + cplx{0.0, 1.0} * pm;
}

// dPhi_n/dp in the plane picture, evaluated at u = p/d - 1:
// (V/d) (4n/pi) sin(n theta_w / 2) (1 - u^2)^(n-1) / P(u).
inline cplx phi_n_prime_u(cplx u, const MultipoleSpec& spec) {
  spec.validate();
  const cplx P = edge_polynomial(u, spec.n, spec.theta0, spec.theta_w);
  if (std::abs(P) == 0.0) throw SingularityError("phi_n_prime: point is on an electrode edge");
  return spec.V / spec.d * (4.0 * spec.n / constants::pi) * std::sin(spec.n * spec.theta_w / 2) *
         std::pow(1.0 - u * u, spec.n - 1) / P;
}

inline cplx phi_n_prime_p(cplx p, const MultipoleSpec& spec) {
  return phi_n_prime_u(p / spec.d - 1.0, spec);
}

// Leading plane-picture coefficient
// alpha_p = 2^-n (2/pi) sin(n theta_w / 2) (V / d^n) e^{-i n theta0}.
inline cplx strength(const MultipoleSpec& spec) {
  spec.validate();
  const int n = spec.n;
  return std::pow(2.0, -n) * (2.0 / constants::pi) * std::sin(n * spec.theta_w / 2) * spec.V /
         std::pow(spec.d, n) * std::polar(1.0, -n * spec.theta0);
}

// |alpha_p| at theta_w = pi / n: 2 V / (pi (2 d)^n).
inline double max_strength(int n, double d, double V) {
  if (n < 1) throw DomainError("max_strength: n must be >= 1");
  return 2.0 * V / (constants::pi * std::pow(2.0 * d, n));
}

// q = |alpha_p| 4 Q / (M Omega^2) for quadrupoles. The voltage and ion
// height are taken from params; spec supplies the angles.
inline double q_parameter(const MultipoleSpec& spec, const TrapParams& params) {
  if (spec.n != 2) throw DomainError("q_parameter: only defined for n = 2");
  params.validate();
  MultipoleSpec s = spec;
  s.V = params.rf_peak_voltage;
  s.d = params.ion_plane_distance;
  const double omega = params.rf_angular_frequency;
  return std::abs(strength(s)) * 4.0 * params.ion_charge / (params.ion_mass * omega * omega);
}

struct Comparison3d {
  double alpha_3d = 0.0;      // V / (2 d^n)
  double alpha_se_max = 0.0;  // 2 V / (pi (2d)^n)
  double ratio = 0.0;         // 2^n pi / 4
};

inline Comparison3d compare_3d(const MultipoleSpec& spec) {
  spec.validate();
  Comparison3d out;
  out.alpha_3d = 0.5 * spec.V / std::pow(spec.d, spec.n);
  out.alpha_se_max = max_strength(spec.n, spec.d, spec.V);
  out.ratio = out.alpha_3d / out.alpha_se_max;
  return out;
}

}  // namespace setrap
