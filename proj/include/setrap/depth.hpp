#pragma once

// Exact saddle of the ponderomotive potential of surface-electrode
// multipoles. Plane coordinate u = p/d - 1: the trap centre is u = -1, the
// electrode plane Re u = 0, the trap region Re u < 0. With
// f = Phi_n' d / V = (4n/pi) sin(n theta_w/2) (1 - u^2)^(n-1) / P(u) the
// pseudopotential is U0 |f|^2, and f'/f = -S / ((1 - u^2) P) with
// S = 2u(n-1)P + (1 - u^2)P'.

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <complex>
#include <optional>
#include <sstream>
#include <vector>

#include "setrap/error.hpp"
#include "setrap/multipole.hpp"
#include "setrap/units.hpp"

namespace setrap {

using RealPoly = std::vector<double>;  // ascending powers of u

namespace detail {

inline void check_depth_order(int n) {
  if (n < 2) throw DomainError("depth analysis needs n >= 2");
}

inline RealPoly poly_add(const RealPoly& a, const RealPoly& b, double sb = 1.0) {
  RealPoly out(std::max(a.size(), b.size()), 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) out[i] += a[i];
  for (std::size_t i = 0; i < b.size(); ++i) out[i] += sb * b[i];
  return out;
}

inline RealPoly poly_scale(RealPoly a, double s) {
  for (double& c : a) c *= s;
  return a;
}

inline RealPoly poly_derivative(const RealPoly& a) {
  if (a.size() <= 1) return {0.0};
  RealPoly out(a.size() - 1);
  for (std::size_t i = 1; i < a.size(); ++i) out[i - 1] = double(i) * a[i];
  return out;
}

// (1 + sign u)^m.
inline RealPoly binomial_power(double sign, int m) {
  RealPoly out(m + 1);
  double c = 1.0;
  for (int k = 0; k <= m; ++k) {
    out[k] = c * std::pow(sign, k);
    c = c * (m - k) / (k + 1);
  }
  return out;
}

// (1 - u^2)^m.
inline RealPoly one_minus_u2_power(int m) {
  RealPoly out(2 * m + 1, 0.0);
  double c = 1.0;
  for (int k = 0; k <= m; ++k) {
    out[2 * k] = (k % 2 ? -c : c);
    c = c * (m - k) / (k + 1);
  }
  return out;
}

// 2u(n-1)X + (1 - u^2)X'.
inline RealPoly s_from_p(const RealPoly& x, int n) {
  const RealPoly dx = poly_derivative(x);
  RealPoly out(x.size() + 1, 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) out[i + 1] += 2.0 * (n - 1) * x[i];
  for (std::size_t i = 0; i < dx.size(); ++i) {
    out[i] += dx[i];
    out[i + 2] -= dx[i];
  }
  return out;
}

template <class C>
cplx poly_eval(const std::vector<C>& a, cplx u) {
  cplx acc = 0.0;
  for (std::size_t i = a.size(); i-- > 0;) acc = acc * u + cplx(a[i]);
  return acc;
}

// Sum |a_k| |u|^k: the scale against which a residual is judged.
template <class C>
double poly_magnitude(const std::vector<C>& a, cplx u) {
  double acc = 0.0;
  const double r = std::abs(u);
  for (std::size_t i = a.size(); i-- > 0;) acc = acc * r + std::abs(a[i]);
  return acc;
}

inline constexpr double leading_trim = 1e-13;
inline constexpr double root_residual_tolerance = 1e-12;

// t = (1 + u)/(1 - u); |t| < 1 in the trap region.
inline cplx half_plane_ratio(cplx u) { return (1.0 + u) / (1.0 - u); }

}  // namespace detail

// Roots of sum c_k u^k via companion-matrix eigenvalues, each Newton
// polished. Leading coefficients below 1e-13 of the largest are dropped
// (roots at infinity).
inline std::vector<cplx> polynomial_roots(std::vector<cplx> c) {
  double scale = 0.0;
  for (const cplx& x : c) scale = std::max(scale, std::abs(x));
  if (scale == 0.0) throw DomainError("polynomial_roots: zero polynomial");
  while (c.size() > 1 && std::abs(c.back()) < detail::leading_trim * scale) c.pop_back();
  const int deg = int(c.size()) - 1;
  if (deg < 1) return {};
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(deg, deg);
  for (int i = 1; i < deg; ++i) m(i, i - 1) = 1.0;
  for (int i = 0; i < deg; ++i) m(i, deg - 1) = -c[i] / c[deg];
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(m, false);
  if (es.info() != Eigen::Success) throw NumericalError("polynomial_roots: eigen solver failed");
  std::vector<cplx> dc(deg);
  for (int i = 1; i <= deg; ++i) dc[i - 1] = double(i) * c[i];
  std::vector<cplx> roots;
  for (int i = 0; i < deg; ++i) {
    cplx r = es.eigenvalues()[i];
    for (int it = 0; it < 4; ++it) {
      const cplx v = detail::poly_eval(c, r);
      const cplx dv = detail::poly_eval(dc, r);
      if (dv == cplx{0.0}) break;
      const cplx next = r - v / dv;
      if (std::abs(detail::poly_eval(c, next)) >= std::abs(v)) break;
      r = next;
    }
    roots.push_back(r);
  }
  return roots;
}

struct SaddlePolynomials {
  int n = 2;
  RealPoly p_plus, p_minus, s_plus, s_minus;

  std::vector<cplx> p() const {
    std::vector<cplx> out(std::max(p_plus.size(), p_minus.size()), 0.0);
    for (std::size_t i = 0; i < p_plus.size(); ++i) out[i] += p_plus[i];
    for (std::size_t i = 0; i < p_minus.size(); ++i) out[i] += cplx{0.0, p_minus[i]};
    return out;
  }
  std::vector<cplx> s() const {
    std::vector<cplx> out(std::max(s_plus.size(), s_minus.size()), 0.0);
    for (std::size_t i = 0; i < s_plus.size(); ++i) out[i] += s_plus[i];
    for (std::size_t i = 0; i < s_minus.size(); ++i) out[i] += cplx{0.0, s_minus[i]};
    return out;
  }
};

inline SaddlePolynomials build_polynomials(int n, double theta0, double theta_w) {
  detail::check_depth_order(n);
  const RealPoly lo = detail::binomial_power(-1.0, 2 * n);
  const RealPoly hi = detail::binomial_power(+1.0, 2 * n);
  const RealPoly even = detail::poly_add(lo, hi);
  const RealPoly odd = detail::poly_add(lo, hi, -1.0);
  const RealPoly f = detail::one_minus_u2_power(n);
  SaddlePolynomials out;
  out.n = n;
  out.p_plus = detail::poly_add(detail::poly_scale(even, std::cos(n * theta0)),
                                detail::poly_scale(f, 2.0 * std::cos(n * theta_w / 2)), -1.0);
  out.p_minus = detail::poly_scale(odd, std::sin(n * theta0));
  out.s_plus = detail::s_from_p(out.p_plus, n);
  out.s_minus = detail::s_from_p(out.p_minus, n);
  return out;
}

// f(u) = Phi_n'(u) d / V, evaluated in a form divided through by
// (1 - u)^(2n) so that large n does not overflow.
inline cplx reduced_field(cplx u, int n, double theta0, double theta_w) {
  const cplx t = detail::half_plane_ratio(u);
  const cplx tn = std::pow(t, n);
  const cplx t2n = tn * tn;
  const cplx p = std::cos(n * theta0) * (1.0 + t2n) - 2.0 * tn * std::cos(n * theta_w / 2) +
                 cplx{0.0, std::sin(n * theta0)} * (1.0 - t2n);
  if (std::abs(p) == 0.0) throw SingularityError("reduced_field: point is on an electrode edge");
  return (4.0 * n / constants::pi) * std::sin(n * theta_w / 2) * std::pow(t, n - 1) /
         ((1.0 - u) * (1.0 - u) * p);
}

// Edge positions u = i tan(phi/2), sorted by ordinate. Edges at phi = pi
// (u at infinity) are omitted.
inline std::vector<double> edge_ordinates(int n, double theta0, double theta_w) {
  std::vector<double> out;
  for (int k = 0; k < n; ++k) {
    for (double s : {-0.5, 0.5}) {
      const double phi = std::remainder(theta0 + s * theta_w + 2.0 * constants::pi * k / n,
                                        2.0 * constants::pi);
      const double c = std::cos(phi / 2);
      if (std::abs(c) < 1e-12) continue;
      out.push_back(std::sin(phi / 2) / c);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

struct SaddleEstimate {
  cplx u;
  double residual = 0.0;  // |S(u)| / sum |s_k||u|^k
};

struct SaddleChain {
  std::vector<SaddleEstimate> steps;  // u^(0) = -n, ...
  bool failed = false;                // P(u^(k)) vanished
};

// u^(k+1) = n u^(k) + (1 - u^2) P'(u) / (2 P(u)); S(u) = 0 is a fixed point.
inline SaddleChain iterate_saddle(int n, double theta0, double theta_w, int k_max,
                                  std::optional<cplx> start = std::nullopt) {
  detail::check_depth_order(n);
  if (k_max < 0) throw DomainError("iterate_saddle: k_max must be >= 0");
  const SaddlePolynomials sp = build_polynomials(n, theta0, theta_w);
  const std::vector<cplx> p = sp.p();
  const std::vector<cplx> s = sp.s();
  std::vector<cplx> dp(p.size() > 1 ? p.size() - 1 : 1, 0.0);
  for (std::size_t i = 1; i < p.size(); ++i) dp[i - 1] = double(i) * p[i];
  SaddleChain out;
  cplx u = start.value_or(cplx(-double(n)));
  auto record = [&](cplx v) {
    out.steps.push_back({v, std::abs(detail::poly_eval(s, v)) / detail::poly_magnitude(s, v)});
  };
  record(u);
  for (int k = 0; k < k_max; ++k) {
    const cplx pv = detail::poly_eval(p, u);
    if (std::abs(pv) == 0.0) {
      out.failed = true;
      break;
    }
    u = double(n) * u + (1.0 - u * u) * detail::poly_eval(dp, u) / (2.0 * pv);
    record(u);
  }
  return out;
}

struct SpecialSaddle {
  int n = 2;
  double u_bar = 0.0;  // negative real root of S-
  double A = 0.0;      // cos(n theta_w/2) / cos(n theta0) that puts the saddle at u_bar
};

// S-(u) / sin(n theta0) divided by -2 (1 - u)^(2n):
// g(u) = u (1 - r) + n (1 + r), r = ((1 + u)/(1 - u))^(2n).
inline SpecialSaddle special_saddle(int n) {
  detail::check_depth_order(n);
  auto g = [n](double u) {
    const double r = std::exp(2.0 * n * std::log((u + 1.0) / (u - 1.0)));
    return u * (1.0 - r) + n * (1.0 + r);
  };
  double a = -1.1 * n;
  double b = -double(n);
  if (!(g(a) < 0.0 && g(b) > 0.0)) {
    throw NumericalError("special_saddle: no sign change of S- in [-1.1n, -n]");
  }
  for (int it = 0; it < 200 && b - a > 4 * std::numeric_limits<double>::epsilon() * std::abs(a); ++it) {
    const double m = 0.5 * (a + b);
    (g(m) < 0.0 ? a : b) = m;
  }
  const double u = 0.5 * (a + b);
  const double t = (1.0 + u) / (1.0 - u);
  const double r = std::pow(t, 2 * n);
  const double s = std::pow(t, n);
  SpecialSaddle out;
  out.n = n;
  out.u_bar = u;
  out.A = (2.0 * u * (n - 1) * (1.0 + r) - 2.0 * n * (1.0 + u) + 2.0 * n * r * (1.0 - u)) /
          (-4.0 * u * s);
  return out;
}

// D_bar_n / U0: depth at the special saddle, evaluated in the configuration
// theta_w = pi/n, theta0 = pi/(2n), which satisfies the condition for any A_n.
inline double special_depth_over_u0(int n) {
  const SpecialSaddle ss = special_saddle(n);
  const cplx f = reduced_field(ss.u_bar, n, constants::pi / (2 * n), constants::pi / n);
  return std::norm(f);
}

struct SaddleReport {
  int n = 2;
  cplx u_saddle;
  cplx p_over_d;               // 1 + u
  double depth_over_u0 = 0.0;  // |f(u_saddle)|^2
  double residual = 0.0;
  std::vector<cplx> axis_roots;  // sorted by ordinate
  std::vector<double> edges;     // finite edge ordinates
  SaddleChain estimate_chain;
  bool is_special = false;
  double A_n = 0.0;
  double u_bar = 0.0;
};

inline constexpr double axis_tolerance = 1e-8;

inline SaddleReport find_saddle(int n, double theta0, double theta_w, int chain_steps = 3) {
  MultipoleSpec spec;
  spec.n = n;
  spec.theta0 = theta0;
  spec.theta_w = theta_w;
  detail::check_depth_order(n);
  spec.validate();
  const SaddlePolynomials sp = build_polynomials(n, theta0, theta_w);
  const std::vector<cplx> s = sp.s();
  const std::vector<cplx> roots = polynomial_roots(s);

  SaddleReport out;
  out.n = n;
  out.edges = edge_ordinates(n, theta0, theta_w);
  std::vector<cplx> left, right;
  for (cplx r : roots) {
    if (std::abs(r.real()) <= axis_tolerance * std::max(1.0, std::abs(r))) {
      out.axis_roots.push_back({0.0, r.imag()});
    } else {
      (r.real() < 0.0 ? left : right).push_back(r);
    }
  }
  std::sort(out.axis_roots.begin(), out.axis_roots.end(),
            [](cplx a, cplx b) { return a.imag() < b.imag(); });

  std::ostringstream diag;
  bool ok = left.size() == 1 && right.size() == 1 && out.axis_roots.size() + 2 == roots.size();
  // One axis root strictly inside each gap between consecutive finite edges.
  for (std::size_t g = 0; ok && g + 1 < out.edges.size(); ++g) {
    int count = 0;
    for (cplx r : out.axis_roots) {
      if (r.imag() > out.edges[g] && r.imag() < out.edges[g + 1]) ++count;
    }
    if (count != 1) ok = false;
  }
  if (!ok) {
    diag << "find_saddle: root structure mismatch for n=" << n << " theta0=" << theta0
         << " theta_w=" << theta_w << "; roots (residual):";
    for (cplx r : roots) {
      diag << " " << r << " (" << std::abs(detail::poly_eval(s, r)) / detail::poly_magnitude(s, r)
           << ")";
    }
    throw NumericalError(diag.str());
  }

  out.u_saddle = left.front();
  out.residual =
      std::abs(detail::poly_eval(s, out.u_saddle)) / detail::poly_magnitude(s, out.u_saddle);
  if (out.residual > detail::root_residual_tolerance) {
    diag << "find_saddle: residual " << out.residual << " above tolerance at u=" << out.u_saddle;
    throw NumericalError(diag.str());
  }
  out.p_over_d = 1.0 + out.u_saddle;
  out.depth_over_u0 = std::norm(reduced_field(out.u_saddle, n, theta0, theta_w));
  out.estimate_chain = iterate_saddle(n, theta0, theta_w, chain_steps);
  const SpecialSaddle ss = special_saddle(n);
  out.A_n = ss.A;
  out.u_bar = ss.u_bar;
  out.is_special = std::abs(out.u_saddle - ss.u_bar) < 1e-9 * n;
  return out;
}

struct DepthReport {
  SaddleReport saddle;
  double depth = 0.0;     // J
  double crude = 0.0;     // J
  cplx p_saddle;          // m, plane picture
};

// [4 / (e^2 pi)]^2 U0.
inline double crude_estimate_prefactor(const TrapParams& params) {
  const double k = 4.0 / (std::exp(2.0) * constants::pi);
  return k * k * scale_factors(params).U0;
}

// [(1/n) sin(n theta_w/2) 4 / (e^2 pi)]^2 U0.
inline double crude_estimate(int n, double theta_w, const TrapParams& params) {
  const double s = std::sin(n * theta_w / 2) / n;
  return s * s * crude_estimate_prefactor(params);
}

inline DepthReport intrinsic_depth(int n, double theta0, double theta_w, const TrapParams& params) {
  params.validate();
  DepthReport out;
  out.saddle = find_saddle(n, theta0, theta_w);
  const double U0 = scale_factors(params).U0;
  out.depth = out.saddle.depth_over_u0 * U0;
  out.crude = crude_estimate(n, theta_w, params);
  out.p_saddle = out.saddle.p_over_d * params.ion_plane_distance;
  return out;
}

struct OptimalCondition {
  double lhs = 0.0;  // cos(n theta_w / 2)
  double rhs = 0.0;  // A_n cos(n theta0)
  bool condition_holds = false;   // |lhs - rhs| < 1e-9
  bool satisfied = false;         // saddle at u_bar within 1e-9 n
};

inline OptimalCondition optimal_condition(int n, double theta0, double theta_w) {
  const SpecialSaddle ss = special_saddle(n);
  OptimalCondition out;
  out.lhs = std::cos(n * theta_w / 2);
  out.rhs = ss.A * std::cos(n * theta0);
  out.condition_holds = std::abs(out.lhs - out.rhs) < 1e-9;
  out.satisfied = find_saddle(n, theta0, theta_w, 0).is_special;
  return out;
}

struct SaddleCheck {
  double gradient = 0.0;  // |grad U_p| in units of U0 / d
  double eig_min = 0.0;   // Hessian eigenvalues, U0 / d^2
  double eig_max = 0.0;
  bool is_saddle = false;
};

// Gradient from f'/f = -S/((1 - u^2) P); Hessian by central differences of
// U_p/U0 = |f|^2 in (Re u, Im u).
inline SaddleCheck check_saddle(int n, double theta0, double theta_w, cplx u) {
  const SaddlePolynomials sp = build_polynomials(n, theta0, theta_w);
  const cplx f = reduced_field(u, n, theta0, theta_w);
  const cplx sv = detail::poly_eval(sp.s(), u);
  const cplx pv = detail::poly_eval(sp.p(), u);
  SaddleCheck out;
  out.gradient = 2.0 * std::norm(f) * std::abs(sv / ((1.0 - u * u) * pv));
  auto U = [&](double dx, double dy) {
    return std::norm(reduced_field(u + cplx{dx, dy}, n, theta0, theta_w));
  };
  const double h = 1e-3 * std::max(1.0, std::abs(u));
  const double u0 = U(0, 0);
  const double uxx = (U(h, 0) - 2 * u0 + U(-h, 0)) / (h * h);
  const double uyy = (U(0, h) - 2 * u0 + U(0, -h)) / (h * h);
  const double uxy = (U(h, h) - U(h, -h) - U(-h, h) + U(-h, -h)) / (4 * h * h);
  const double mean = 0.5 * (uxx + uyy);
  const double rad = std::hypot(0.5 * (uxx - uyy), uxy);
  out.eig_min = mean - rad;
  out.eig_max = mean + rad;
  out.is_saddle = out.eig_min < 0.0 && out.eig_max > 0.0;
  return out;
}

}  // namespace setrap
