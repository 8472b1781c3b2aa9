#pragma once

// Effective potential: ponderomotive term plus control potentials, the
// rf-bias landscape of surface-electrode multipoles, bias optimization and
// the quadrupole stability check.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <tuple>
#include <vector>

#include "setrap/depth.hpp"
#include "setrap/error.hpp"
#include "setrap/multipole.hpp"
#include "setrap/ring.hpp"
#include "setrap/surface_field.hpp"
#include "setrap/units.hpp"

namespace setrap {

// U_p = Q^2 |E|^2 / (4 M Omega^2) for an rf amplitude |E| (V/m).
inline double ponderomotive(double e_amplitude, const TrapParams& params) {
  params.validate();
  const double w = params.rf_angular_frequency;
  return params.ion_charge * params.ion_charge * e_amplitude * e_amplitude /
         (4.0 * params.ion_mass * w * w);
}

// U_eff(r) = U_p(r) + Q (V_c,rf beta_rf(r) + sum V_i beta_i(r)). rf_regions
// carry their rf amplitudes; beta_rf is their potential at unit voltage.
// control_regions carry their dc voltages.
inline double u_eff_general(Vec3 r, std::span<const PlanarRegion> rf_regions, double rf_bias,
                            std::span<const PlanarRegion> control_regions,
                            const TrapParams& params) {
  const FieldSample rf = superpose(rf_regions, r);
  double beta_rf = 0.0;
  for (const auto& reg : rf_regions) {
    PlanarRegion unit = reg;
    unit.voltage = 1.0;
    beta_rf += evaluate(unit, r).potential;
  }
  const double control =
      control_regions.empty() ? 0.0 : superpose(control_regions, r).potential;
  return ponderomotive(norm(rf.field), params) +
         params.ion_charge * (rf_bias * beta_rf + control);
}

struct BiasedConfig {
  MultipoleSpec spec;  // n, theta0, theta_w; d and V are taken from params
  double v_c = 0.0;    // Q V_c,rf / U0
  TrapParams params;
};

// Dimensionless landscape U_eff / U0 = v_c beta_rf + |f|^2 on the unit disk
// w = c / d, with f = Phi_n' d / V in the plane picture.
class BiasLandscape {
 public:
  BiasLandscape(int n, double theta0, double theta_w, double v_c = 0.0)
      : v_c_(v_c), polys_(build_polynomials(n, theta0, theta_w)) {
    spec_.n = n;
    spec_.theta0 = theta0;
    spec_.theta_w = theta_w;
    spec_.d = 1.0;
    spec_.V = 1.0;
    spec_.validate();
    p_ = polys_.p();
    s_ = polys_.s();
  }

  void set_bias(double v_c) { v_c_ = v_c; }
  double bias() const { return v_c_; }
  const MultipoleSpec& spec() const { return spec_; }

  double beta(cplx w) const { return multipole_potential(w, spec_); }
  double ponderomotive(cplx w) const { return std::norm(field(w)); }
  double value(cplx w) const { return v_c_ * beta(w) + ponderomotive(w); }

  // f in the plane picture at the cylinder point w.
  cplx field(cplx w) const { return phi_n_prime_c(w, spec_) / mobius_derivative(w, 1.0); }

  // Gradient in (Re w, Im w) packed as a complex number.
  cplx gradient(cplx w) const {
    const int n = spec_.n;
    const cplx u = mobius_to_plane(w, 1.0) - 1.0;
    const cplx P = detail::poly_eval(p_, u);
    const cplx S = detail::poly_eval(s_, u);
    const cplx f = field(w);
    // df/du = -(4n/pi) sin(n theta_w/2) (1 - u^2)^(n-2) S / P^2.
    const cplx dfdu = -(4.0 * n / constants::pi) * std::sin(n * spec_.theta_w / 2) *
                      std::pow(1.0 - u * u, n - 2) * S / (P * P);
    const cplx dgdw = dfdu * mobius_derivative(w, 1.0);
    const cplx h = v_c_ * phi_n_prime_c(w, spec_) + 2.0 * std::conj(f) * dgdw;
    return std::conj(h);
  }

  // Hessian by central differences of the analytic gradient.
  std::array<double, 3> hessian(cplx w, double h = 1e-6) const {
    const cplx gx = (gradient(w + h) - gradient(w - h)) / (2 * h);
    const cplx gy = (gradient(w + cplx{0, h}) - gradient(w - cplx{0, h})) / (2 * h);
    return {gx.real(), 0.5 * (gx.imag() + gy.real()), gy.imag()};
  }

 private:
  double v_c_;
  MultipoleSpec spec_;
  SaddlePolynomials polys_;
  std::vector<cplx> p_, s_;
};

// U_eff = U0 (v_c beta_rf(p) + d^2 |grad beta_rf|^2) at the plane point p (m).
inline double u_eff_bias(cplx p, const BiasedConfig& config) {
  config.params.validate();
  const double d = config.params.ion_plane_distance;
  const BiasLandscape land(config.spec.n, config.spec.theta0, config.spec.theta_w, config.v_c);
  const cplx w = mobius_to_cylinder(p / d, 1.0);
  if (std::abs(w) >= 1.0) throw DomainError("u_eff_bias: point is outside the trap region");
  return scale_factors(config.params).U0 * land.value(w);
}

struct StationaryPoint {
  cplx w;               // c / d
  double value = 0.0;   // U_eff / U0
  double eig_min = 0.0;
  double eig_max = 0.0;
  bool converged = false;
};

namespace detail {

inline std::pair<double, double> eigen2(const std::array<double, 3>& h) {
  const double mean = 0.5 * (h[0] + h[2]);
  const double rad = std::hypot(0.5 * (h[0] - h[2]), h[1]);
  return {mean - rad, mean + rad};
}

// Newton on grad U = 0 with step damping; stays inside |w| < limit.
inline StationaryPoint newton_stationary(const BiasLandscape& land, cplx w0, double limit = 0.9999,
                                         int max_iter = 60) {
  StationaryPoint out;
  cplx w = w0;
  for (int it = 0; it < max_iter; ++it) {
    const cplx g = land.gradient(w);
    const auto h = land.hessian(w);
    const double det = h[0] * h[2] - h[1] * h[1];
    if (det == 0.0 || !std::isfinite(det)) break;
    const cplx step{-(h[2] * g.real() - h[1] * g.imag()) / det,
                    -(-h[1] * g.real() + h[0] * g.imag()) / det};
    double lambda = 1.0;
    while (std::abs(w + lambda * step) >= limit && lambda > 1e-6) lambda *= 0.5;
    w += lambda * step;
    if (std::abs(step) * lambda < 1e-14) {
      out.converged = true;
      break;
    }
  }
  const double gn = std::abs(land.gradient(w));
  out.converged = out.converged || gn < 1e-12;
  out.w = w;
  out.value = land.value(w);
  std::tie(out.eig_min, out.eig_max) = eigen2(land.hessian(w));
  return out;
}

}  // namespace detail

struct BiasDepth {
  bool trapped = false;
  double depth_over_u0 = 0.0;
  StationaryPoint minimum;
  StationaryPoint saddle;
  bool saddle_refined = false;  // Newton converged to a (+,-) point
  bool escape_at_rim = false;   // barrier is the boundary limit, not a saddle
};

// Grid over the disk |w| <= 0.999 with the two landscape parts cached, so
// that depth at many v_c costs one flood fill each.
class BiasDepthSolver {
 public:
  static constexpr double radius = 0.999;
  static constexpr double rim_radius = 1.0 - 1e-9;
  static constexpr int rim_samples = 24;

  explicit BiasDepthSolver(int n, double theta0, double theta_w, int cells = 256)
      : land_(n, theta0, theta_w), cells_(cells) {
    if (cells < 16) throw DomainError("BiasDepthSolver: need at least 16 cells per side");
    const int N = cells_;
    beta_.assign(N * N, 0.0);
    pond_.assign(N * N, 0.0);
    inside_.assign(N * N, 0);
    for (int i = 0; i < N; ++i) {
      for (int j = 0; j < N; ++j) {
        const cplx w = position(i, j);
        if (std::abs(w) > radius) continue;
        const int k = i * N + j;
        inside_[k] = 1;
        beta_[k] = land_.beta(w);
        pond_[k] = land_.ponderomotive(w);
      }
    }
    boundary_.assign(N * N, 0);
    for (int i = 0; i < N; ++i) {
      for (int j = 0; j < N; ++j) {
        if (!inside_[i * N + j]) continue;
        const int nb[4][2] = {{i - 1, j}, {i + 1, j}, {i, j - 1}, {i, j + 1}};
        for (auto& q : nb) {
          if (q[0] < 0 || q[0] >= N || q[1] < 0 || q[1] >= N || !inside_[q[0] * N + q[1]]) {
            boundary_[i * N + j] = 1;
          }
        }
      }
    }
    // Radial path from each rim cell out to |w| = 1 - 1e-9, spaced
    // geometrically in 1 - |w|; w -> -1 is the ion leaving to infinity.
    for (int k = 0; k < N * N; ++k) {
      if (!boundary_[k]) continue;
      const cplx w = position(k / N, k % N);
      const double gap = 1.0 - std::abs(w);
      RimPath path;
      path.cell = k;
      for (int m = 1; m <= rim_samples; ++m) {
        const double g = gap * std::pow((1.0 - rim_radius) / gap, double(m) / rim_samples);
        const cplx x = std::polar(1.0 - g, std::arg(w));
        path.points.push_back(x);
        path.beta.push_back(land_.beta(x));
        path.pond.push_back(land_.ponderomotive(x));
      }
      rim_.push_back(std::move(path));
    }
  }

  cplx position(int i, int j) const {
    const double h = 2.0 * radius / cells_;
    return {-radius + (i + 0.5) * h, -radius + (j + 0.5) * h};
  }

  const BiasLandscape& landscape() const { return land_; }

  BiasDepth depth(double v_c) {
    land_.set_bias(v_c);
    const int N = cells_;
    std::vector<double> u(N * N, std::numeric_limits<double>::infinity());
    for (int k = 0; k < N * N; ++k) {
      if (inside_[k]) u[k] = v_c * beta_[k] + pond_[k];
    }
    BiasDepth out;

    // Descend on the grid from the centre, then polish.
    int cur = (N / 2) * N + N / 2;
    for (;;) {
      const int i = cur / N, j = cur % N;
      int best = cur;
      for (int di = -1; di <= 1; ++di) {
        for (int dj = -1; dj <= 1; ++dj) {
          const int a = i + di, b = j + dj;
          if (a < 0 || a >= N || b < 0 || b >= N) continue;
          if (u[a * N + b] < u[best]) best = a * N + b;
        }
      }
      if (best == cur) break;
      cur = best;
    }
    if (boundary_[cur]) return out;
    const int min_cell = cur;
    out.minimum = detail::newton_stationary(land_, position(min_cell / N, min_cell % N));
    if (!out.minimum.converged || out.minimum.eig_min < -1e-9 ||
        std::abs(out.minimum.w - position(min_cell / N, min_cell % N)) > 4.0 * radius / N) {
      // Keep the grid cell when the polish wanders off or stalls.
      out.minimum.w = position(min_cell / N, min_cell % N);
      out.minimum.value = u[min_cell];
      out.minimum.converged = false;
    }

    // Ascending union-find over cells and rim exits until the minimum's
    // component reaches the rim. Exit level = highest point on the radial
    // path out of the rim cell.
    struct Event {
      double level;
      int cell;
      bool exit;
      cplx where;
    };
    std::vector<Event> events;
    for (int k = 0; k < N * N; ++k) {
      if (inside_[k]) events.push_back({u[k], k, false, position(k / N, k % N)});
    }
    for (const RimPath& r : rim_) {
      double top = u[r.cell];
      cplx where = position(r.cell / N, r.cell % N);
      for (std::size_t m = 0; m < r.beta.size(); ++m) {
        const double v = v_c * r.beta[m] + r.pond[m];
        if (v > top) {
          top = v;
          where = r.points[m];
        }
      }
      events.push_back({top, r.cell, true, where});
    }
    std::sort(events.begin(), events.end(), [](const Event& a, const Event& b) {
      return a.level < b.level || (a.level == b.level && !a.exit && b.exit);
    });
    detail::UnionFind uf(N * N + 1);
    const int rim = N * N;
    std::vector<char> active(N * N, 0);
    int barrier = -1;
    double barrier_level = 0.0;
    cplx barrier_at;
    for (const Event& e : events) {
      const int k = e.cell;
      if (e.exit) {
        uf.unite(k, rim);
      } else {
        active[k] = 1;
        const int i = k / N, j = k % N;
        const int nb[4][2] = {{i - 1, j}, {i + 1, j}, {i, j - 1}, {i, j + 1}};
        for (auto& q : nb) {
          if (q[0] < 0 || q[0] >= N || q[1] < 0 || q[1] >= N) continue;
          const int m = q[0] * N + q[1];
          if (active[m]) uf.unite(k, m);
        }
      }
      if (active[min_cell] && uf.find(min_cell) == uf.find(rim)) {
        barrier = k;
        barrier_level = e.level;
        barrier_at = e.where;
        break;
      }
    }
    if (barrier < 0) return out;
    out.saddle.w = barrier_at;
    out.saddle.value = barrier_level;
    if (barrier_at == position(barrier / N, barrier % N)) {
      const StationaryPoint s = detail::newton_stationary(land_, out.saddle.w);
      if (s.converged && s.eig_min < 0.0 && s.eig_max > 0.0 &&
          std::abs(s.w - out.saddle.w) < 4.0 * radius / N) {
        out.saddle = s;
        out.saddle_refined = true;
      }
    } else {
      out.escape_at_rim = true;
    }
    out.depth_over_u0 = out.saddle.value - out.minimum.value;
    out.trapped = out.depth_over_u0 > 0.0;
    if (!out.trapped) out.depth_over_u0 = 0.0;
    return out;
  }

 private:
  BiasLandscape land_;
  int cells_;
  struct RimPath {
    int cell = 0;
    std::vector<cplx> points;
    std::vector<double> beta, pond;
  };
  std::vector<double> beta_, pond_;
  std::vector<char> inside_, boundary_;
  std::vector<RimPath> rim_;
};

struct BiasOptimum {
  double v_c = 0.0;
  BiasDepth at_optimum;
  double depth_over_u0 = 0.0;
  double ratio_to_dbar = 0.0;       // modified depth / D_bar_n
  double ratio_to_intrinsic = 0.0;  // modified depth / depth at v_c = 0
  double intrinsic_over_u0 = 0.0;
  double a_over_q2 = 0.0;           // n = 2 only, else NaN
  double bias_voltage = 0.0;        // V
  std::vector<std::pair<double, double>> scan;  // (v_c, depth / U0)
};

// 41-point scan of v_c over [-1, 1], then golden section around the best.
inline BiasOptimum optimize_bias(const MultipoleSpec& spec, const TrapParams& params,
                                 int cells = 256) {
  params.validate();
  BiasDepthSolver solver(spec.n, spec.theta0, spec.theta_w, cells);
  BiasOptimum out;
  auto depth_at = [&](double v) { return solver.depth(v).depth_over_u0; };
  for (int k = 0; k <= 40; ++k) {
    const double v = -1.0 + 2.0 * k / 40;
    out.scan.push_back({v, depth_at(v)});
  }
  const auto best = std::max_element(out.scan.begin(), out.scan.end(),
                                     [](auto& a, auto& b) { return a.second < b.second; });
  const std::size_t bi = std::size_t(best - out.scan.begin());
  const double lo = out.scan[bi == 0 ? 0 : bi - 1].first;
  const double hi = out.scan[std::min(bi + 1, out.scan.size() - 1)].first;
  out.v_c = detail::golden_max(depth_at, lo, hi, 1e-7);
  if (depth_at(out.v_c) < best->second) out.v_c = best->first;

  out.at_optimum = solver.depth(out.v_c);
  out.depth_over_u0 = out.at_optimum.depth_over_u0;
  out.intrinsic_over_u0 = solver.depth(0.0).depth_over_u0;
  out.ratio_to_dbar = out.depth_over_u0 / special_depth_over_u0(spec.n);
  out.ratio_to_intrinsic = out.depth_over_u0 / out.intrinsic_over_u0;
  out.bias_voltage = bias_voltage_for(out.v_c, params);
  if (spec.n == 2) {
    MultipoleSpec unit = spec;
    unit.d = 1.0;
    unit.V = 1.0;
    out.a_over_q2 = out.v_c / (8.0 * std::abs(strength(unit)));
  } else {
    out.a_over_q2 = std::numeric_limits<double>::quiet_NaN();
  }
  return out;
}

struct Stability {
  double q = 0.0;
  double a = 0.0;
  double a_over_q2 = 0.0;
  double v_c_bound = 0.0;  // |v_c| limit from |a/q^2| < 0.5: 4 |alpha_bar|
  bool stable = false;
};

inline constexpr double stability_q_limit = 0.7;
inline constexpr double stability_aq2_limit = 0.5;

// Quadrupoles only: a = 2 q V_c,rf / V_rf, stable iff q < 0.7 and |a/q^2| < 0.5.
inline Stability stability(const MultipoleSpec& spec, double v_c, const TrapParams& params) {
  if (spec.n != 2) throw DomainError("stability: only defined for n = 2");
  params.validate();
  Stability out;
  out.q = q_parameter(spec, params);
  out.a = 2.0 * out.q * bias_voltage_for(v_c, params) / params.rf_peak_voltage;
  MultipoleSpec unit = spec;
  unit.d = 1.0;
  unit.V = 1.0;
  const double alpha_bar = std::abs(strength(unit));
  out.a_over_q2 = v_c / (8.0 * alpha_bar);
  out.v_c_bound = stability_aq2_limit * 8.0 * alpha_bar;
  out.stable = out.q < stability_q_limit && std::abs(out.a_over_q2) < stability_aq2_limit;
  return out;
}

struct ContourSample {
  double c_re = 0.0;  // c / d
  double c_im = 0.0;
  double ueff_over_u0 = 0.0;
};

// U_eff / U0 on a square grid over the unit disk (points with |c| < 0.999 d).
inline std::vector<ContourSample> ueff_contours(const MultipoleSpec& spec, double v_c,
                                                int resolution) {
  if (resolution < 2) throw DomainError("ueff_contours: resolution must be >= 2");
  const BiasLandscape land(spec.n, spec.theta0, spec.theta_w, v_c);
  std::vector<ContourSample> out;
  for (int i = 0; i < resolution; ++i) {
    for (int j = 0; j < resolution; ++j) {
      const cplx w{-1.0 + 2.0 * (i + 0.5) / resolution, -1.0 + 2.0 * (j + 0.5) / resolution};
      if (std::abs(w) >= BiasDepthSolver::radius) continue;
      out.push_back({w.real(), w.imag(), land.value(w)});
    }
  }
  return out;
}

}  // namespace setrap
