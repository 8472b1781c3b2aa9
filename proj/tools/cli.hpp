#pragma once

#include <algorithm>
#include <fstream>
#include <functional>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "io.hpp"
#include "setrap/depth.hpp"
#include "setrap/effpot.hpp"
#include "setrap/fourier.hpp"
#include "setrap/multipole.hpp"
#include "setrap/ring.hpp"
#include "setrap/surface_field.hpp"

namespace setrap::cli {

struct Options {
  std::string params_path;
  std::string geometry_path;
  std::string format;
  std::string output;
  bool deg = false;

  double x_um = 0.0, y_um = 0.0, z_um = 100.0;

  double kx_min = -0.1, kx_max = 0.1, ky_min = -0.1, ky_max = 0.1;  // rad/um
  int nkx = 11, nky = 11;

  std::optional<double> theta;  // default 0.275 rad
  std::optional<double> theta_min, theta_max;  // default 0.01, pi/6 - 0.01
  int steps = 20;

  int n = 2;
  std::optional<double> theta0;      // default pi/2
  std::optional<double> theta_w;     // default pi/2
  std::optional<double> theta0_deg;  // overrides theta0
  double d_um = 0.0;        // 0: from params
  double v = 0.0;           // 0: from params
  int chain_steps = 3;
  int max_n = 4;
  double v_c = 0.0;
  int resolution = 101;
  int cells = 256;
};

struct Leaf {
  CLI::App* app;
  std::vector<std::string> formats;  // first is the default
  std::function<std::string(const Options&)> run;
};

// Defaults are in radians; --deg only converts values given on the command line.
inline double angle(const std::optional<double>& v, double fallback, const Options& o) {
  if (!v) return fallback;
  return o.deg ? *v * std::numbers::pi / 180.0 : *v;
}

inline std::string dump(Json j) {
  Json out;
  out["schema"] = schema;
  for (auto& [k, v] : j.items()) out[k] = v;
  return out.dump(2) + "\n";
}

inline Json complex_json(cplx z) { return Json::array({num(z.real()), num(z.imag())}); }

inline std::string csv_row(std::initializer_list<double> values) {
  std::string s;
  for (double v : values) {
    if (!s.empty()) s += ',';
    s += fmt(v);
  }
  return s + "\n";
}

inline MultipoleSpec multipole_spec(const Options& o, const TrapParams& p) {
  MultipoleSpec s;
  s.n = o.n;
  s.theta0 = o.theta0_deg ? *o.theta0_deg * std::numbers::pi / 180.0
                          : angle(o.theta0, constants::pi / 2, o);
  s.theta_w = angle(o.theta_w, constants::pi / 2, o);
  s.d = o.d_um > 0.0 ? o.d_um * constants::micrometer : p.ion_plane_distance;
  s.V = o.v != 0.0 ? o.v : p.rf_peak_voltage;
  s.validate();
  return s;
}

// ---- params, field, fourier ----

inline std::string cmd_params(const Options& o) {
  const TrapParams p = load_params(o.params_path);
  const ScaleFactors sf = scale_factors(p);
  Json j;
  j["q0"] = num(sf.q0);
  j["u0_ev"] = num(sf.u0_ev());
  j["max_secular_hz"] = num(sf.max_secular_frequency);
  j["params"] = {{"rf_frequency_hz", num(p.rf_angular_frequency / (2 * constants::pi))},
                 {"rf_voltage_v", num(p.rf_peak_voltage)},
                 {"ion_mass_amu", num(p.ion_mass / constants::atomic_mass_unit)},
                 {"ion_charge_e", num(p.ion_charge / constants::elementary_charge)},
                 {"height_um", num(p.ion_plane_distance / constants::micrometer)}};
  return dump(j);
}

inline std::string cmd_field_eval(const Options& o) {
  const auto regions = load_geometry(o.geometry_path);
  const double um = constants::micrometer;
  const FieldSample s = superpose(regions, {o.x_um * um, o.y_um * um, o.z_um * um});
  if (o.format == "csv") {
    return "x_um,y_um,z_um,potential_v,ex_v_per_m,ey_v_per_m,ez_v_per_m\n" +
           csv_row({o.x_um, o.y_um, o.z_um, s.potential, s.field.x, s.field.y, s.field.z});
  }
  Json j;
  j["position_um"] = {num(o.x_um), num(o.y_um), num(o.z_um)};
  j["potential_v"] = num(s.potential);
  j["field_v_per_m"] = {num(s.field.x), num(s.field.y), num(s.field.z)};
  return dump(j);
}

inline std::vector<double> linspace(double a, double b, int count) {
  if (count < 1) throw DomainError("grid size must be >= 1");
  std::vector<double> out(std::size_t(count), a);
  for (int i = 1; i < count; ++i) out[std::size_t(i)] = a + (b - a) * i / (count - 1);
  return out;
}

// Transform in V um^2 on a grid of k in rad/um.
inline std::string cmd_fourier_grid(const Options& o) {
  const auto regions = load_geometry(o.geometry_path);
  const double um = constants::micrometer;
  const auto kxs = linspace(o.kx_min, o.kx_max, o.nkx);
  const auto kys = linspace(o.ky_min, o.ky_max, o.nky);
  for (const auto& r : regions) {
    if (std::holds_alternative<Strip>(r.shape)) {
      throw DomainError("fourier grid: strips have no 2-D transform; use finite shapes");
    }
  }
  std::string s = "kx_per_um,ky_per_um,re_v_um2,im_v_um2\n";
  for (double kx : kxs) {
    for (double ky : kys) {
      cplx sum = 0.0;
      for (const auto& r : regions) sum += surface_transform(r, {kx / um, ky / um});
      sum /= um * um;
      s += csv_row({kx, ky, sum.real(), sum.imag()});
    }
  }
  return s;
}

// ---- ring ----

inline Json ring_json(const RingDesign& r, const TrapParams& p) {
  const RingStrength st = ring_strength(r.theta, p);
  const double um = constants::micrometer;
  Json j;
  j["theta"] = num(r.theta);
  j["R1_um"] = num(r.R1 / um);
  j["R2_um"] = num(r.R2 / um);
  j["qz"] = num(st.q_z);
  j["secular_hz"] = num(st.secular.hz);
  j["adiabatic_warning"] = st.secular.adiabatic_warning;
  return j;
}

inline std::string cmd_ring_design(const Options& o) {
  const TrapParams p = load_params(o.params_path);
  const RingDesign r = make_ring_design(angle(o.theta, 0.275, o), p.ion_plane_distance);
  const Json j = ring_json(r, p);
  if (o.format == "csv") {
    const double um = constants::micrometer;
    return "theta,R1_um,R2_um,qz,secular_hz\n" +
           csv_row({r.theta, r.R1 / um, r.R2 / um, j["qz"].get<double>(),
                    j["secular_hz"].get<double>()});
  }
  return dump(j);
}

inline std::string cmd_ring_sweep(const Options& o) {
  const TrapParams p = load_params(o.params_path);
  const double meV = 1e-3 * constants::elementary_charge;
  const double um = constants::micrometer;
  std::string s = "theta,R1_um,R2_um,qz,secular_hz,depth_mev\n";
  const double lo = angle(o.theta_min, 0.01, o);
  const double hi = angle(o.theta_max, constants::pi / 6 - 0.01, o);
  for (double th : linspace(lo, hi, o.steps)) {
    const RingDesign r = make_ring_design(th, p.ion_plane_distance);
    const RingStrength st = ring_strength(th, p);
    s += csv_row({th, r.R1 / um, r.R2 / um, st.q_z, st.secular.hz, ring_depth(r, p).depth / meV});
  }
  return s;
}

inline std::string cmd_ring_depth(const Options& o) {
  const TrapParams p = load_params(o.params_path);
  const RingDesign r = make_ring_design(angle(o.theta, 0.275, o), p.ion_plane_distance);
  const RingDepth d = ring_depth(r, p);
  const double meV = 1e-3 * constants::elementary_charge;
  const double um = constants::micrometer;
  Json j = ring_json(r, p);
  j["depth_mev"] = num(d.depth / meV);
  j["axial_depth_mev"] = num(d.axial_depth / meV);
  j["axial_saddle_z_um"] = num(d.axial_saddle_z / um);
  j["grid_depth_mev"] = num(d.grid_depth / meV);
  j["saddle_rho_um"] = num(d.saddle_rho / um);
  j["saddle_z_um"] = num(d.saddle_z / um);
  j["escape_axial"] = d.escape_axial;
  return dump(j);
}

// ---- multipole ----

inline std::string cmd_multipole_layout(const Options& o) {
  const MultipoleSpec s = multipole_spec(o, load_params(o.params_path));
  const MultipoleLayout layout = electrode_layout(s);
  Json regions = Json::array();
  for (const auto& st : layout.strips) regions.push_back(strip_json(st.y1, st.y2, s.V));
  Json j;
  j["regions"] = regions;
  return dump(j);
}

// Ion-plane coordinates: y lateral, z height above the electrode plane.
// Plane picture p = (d - z) + i y.
inline std::string cmd_multipole_field(const Options& o) {
  const MultipoleSpec s = multipole_spec(o, load_params(o.params_path));
  const double um = constants::micrometer;
  const cplx p{s.d - o.z_um * um, o.y_um * um};
  if (!(p.real() < s.d)) throw DomainError("multipole field: z must be above the plane");
  const double phi = multipole_potential(mobius_to_cylinder(p, s.d), s);
  const cplx dp = phi_n_prime_p(p, s);
  const double ey = dp.imag();
  const double ez = dp.real();
  if (o.format == "csv") {
    return "y_um,z_um,potential_v,ey_v_per_m,ez_v_per_m\n" +
           csv_row({o.y_um, o.z_um, phi, ey, ez});
  }
  Json j;
  j["position_um"] = {num(o.y_um), num(o.z_um)};
  j["potential_v"] = num(phi);
  j["field_v_per_m"] = {num(ey), num(ez)};
  return dump(j);
}

inline std::string cmd_multipole_strength(const Options& o) {
  const TrapParams p = load_params(o.params_path);
  const MultipoleSpec s = multipole_spec(o, p);
  const cplx a = strength(s);
  const Comparison3d c = compare_3d(s);
  Json j;
  j["n"] = s.n;
  j["alpha"] = complex_json(a);
  j["alpha_abs"] = num(std::abs(a));
  j["alpha_max"] = num(max_strength(s.n, s.d, s.V));
  j["alpha_3d"] = num(c.alpha_3d);
  j["ratio_3d"] = num(c.ratio);
  j["units"] = "V/m^" + std::to_string(s.n);
  if (s.n == 2) j["q"] = num(q_parameter(s, p));
  return dump(j);
}

inline std::string cmd_multipole_depth(const Options& o) {
  const TrapParams p = load_params(o.params_path);
  const MultipoleSpec s = multipole_spec(o, p);
  const SaddleReport r = find_saddle(s.n, s.theta0, s.theta_w, o.chain_steps);
  const double meV = 1e-3 * constants::elementary_charge;
  const double U0 = scale_factors(p).U0;
  Json est = Json::array();
  for (const auto& e : r.estimate_chain.steps) {
    est.push_back({{"u", complex_json(e.u)}, {"residual", num(e.residual)}});
  }
  const OptimalCondition oc = optimal_condition(s.n, s.theta0, s.theta_w);
  Json j;
  j["u_saddle"] = complex_json(r.u_saddle);
  j["p_saddle_um"] = complex_json(r.p_over_d * (p.ion_plane_distance / constants::micrometer));
  j["depth_mev"] = num(r.depth_over_u0 * U0 / meV);
  j["depth_over_u0"] = num(r.depth_over_u0);
  j["crude_mev"] = num(crude_estimate(s.n, s.theta_w, p) / meV);
  j["estimates"] = est;
  j["optimal"] = {{"lhs", num(oc.lhs)},
                  {"rhs", num(oc.rhs)},
                  {"condition_holds", oc.condition_holds},
                  {"satisfied", oc.satisfied}};
  return dump(j);
}

inline std::string cmd_multipole_table(const Options& o) {
  if (o.max_n < 2) throw DomainError("table-an: --max-n must be >= 2");
  if (o.format == "json") {
    Json rows = Json::array();
    for (int n = 2; n <= o.max_n; ++n) {
      const SpecialSaddle ss = special_saddle(n);
      rows.push_back({{"n", n}, {"minus_u_bar_over_n", num(-ss.u_bar / n)}, {"A_n", num(ss.A)}});
    }
    Json j;
    j["rows"] = rows;
    return dump(j);
  }
  std::string s = "n,minus_u_bar_over_n,A_n\n";
  for (int n = 2; n <= o.max_n; ++n) {
    const SpecialSaddle ss = special_saddle(n);
    s += std::to_string(n) + "," + fmt(-ss.u_bar / n) + "," + fmt(ss.A) + "\n";
  }
  return s;
}

inline std::string cmd_multipole_bias_opt(const Options& o) {
  const TrapParams p = load_params(o.params_path);
  const MultipoleSpec s = multipole_spec(o, p);
  const BiasOptimum b = optimize_bias(s, p, o.cells);
  const double meV = 1e-3 * constants::elementary_charge;
  const double U0 = scale_factors(p).U0;
  Json j;
  j["vc_opt"] = num(b.v_c);
  j["depth_ratio"] = num(b.ratio_to_dbar);
  j["ratio_to_intrinsic"] = num(b.ratio_to_intrinsic);
  j["depth_mev"] = num(b.depth_over_u0 * U0 / meV);
  j["a_over_q2"] = num(b.a_over_q2);
  j["bias_voltage_v"] = num(b.bias_voltage);
  j["escape_at_rim"] = b.at_optimum.escape_at_rim;
  if (s.n == 2) {
    j["stable"] = stability(s, b.v_c, p).stable;
  } else {
    j["stable"] = nullptr;
  }
  return dump(j);
}

inline std::string cmd_multipole_contours(const Options& o) {
  const MultipoleSpec s = multipole_spec(o, load_params(o.params_path));
  std::string out = "c_re,c_im,ueff_over_u0\n";
  for (const auto& c : ueff_contours(s, o.v_c, o.resolution)) {
    out += csv_row({c.c_re, c.c_im, c.ueff_over_u0});
  }
  return out;
}

// ---- dispatch ----

inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Surface-electrode rf ion trap design and characterization", "setrap"};
  Options o;
  app.add_option("-c,--params", o.params_path, "trap parameters JSON (default: 100 MHz, 100 V, 10 amu, 1 e, 100 um)");
  app.add_option("--format", o.format, "output format")->check(CLI::IsMember({"json", "csv"}));
  app.add_option("-o,--output", o.output, "write to file instead of stdout");
  app.add_flag("--deg", o.deg, "angles in degrees");
  app.require_subcommand(1);
  app.fallthrough();

  std::vector<Leaf> leaves;

  leaves.push_back({app.add_subcommand("params", "scale factors q0, U0"), {"json"}, cmd_params});

  auto* field = app.add_subcommand("field", "surface-field evaluation")->require_subcommand(1);
  auto* eval = field->add_subcommand("eval", "potential and field at a point");
  eval->add_option("-g,--geometry", o.geometry_path, "geometry JSON")->required();
  eval->add_option("--x-um", o.x_um);
  eval->add_option("--y-um", o.y_um);
  eval->add_option("--z-um", o.z_um);
  leaves.push_back({eval, {"json", "csv"}, cmd_field_eval});

  auto* fourier = app.add_subcommand("fourier", "surface voltage transform")->require_subcommand(1);
  auto* grid = fourier->add_subcommand("grid", "transform on a rectangular k grid");
  grid->add_option("-g,--geometry", o.geometry_path, "geometry JSON")->required();
  grid->add_option("--kx-min", o.kx_min, "rad/um");
  grid->add_option("--kx-max", o.kx_max, "rad/um");
  grid->add_option("--ky-min", o.ky_min, "rad/um");
  grid->add_option("--ky-max", o.ky_max, "rad/um");
  grid->add_option("--nkx", o.nkx);
  grid->add_option("--nky", o.nky);
  leaves.push_back({grid, {"csv"}, cmd_fourier_grid});

  auto* ring = app.add_subcommand("ring", "single-ring trap")->require_subcommand(1);
  auto* design = ring->add_subcommand("design", "radii and strength at theta");
  design->add_option("--theta", o.theta);
  leaves.push_back({design, {"json", "csv"}, cmd_ring_design});
  auto* sweep = ring->add_subcommand("sweep", "design, strength and depth over theta");
  sweep->add_option("--steps", o.steps)->check(CLI::PositiveNumber);
  sweep->add_option("--theta-min", o.theta_min);
  sweep->add_option("--theta-max", o.theta_max);
  leaves.push_back({sweep, {"csv"}, cmd_ring_sweep});
  auto* rdepth = ring->add_subcommand("depth", "trap depth at theta");
  rdepth->add_option("--theta", o.theta);
  leaves.push_back({rdepth, {"json"}, cmd_ring_depth});

  auto* mp = app.add_subcommand("multipole", "conformal-map multipole traps")->require_subcommand(1);
  auto spec_opts = [&](CLI::App* a) {
    a->add_option("--n", o.n);
    a->add_option("--theta0", o.theta0);
    a->add_option("--theta0-deg", o.theta0_deg, "theta0 in degrees");
    a->add_option("--thetaw", o.theta_w);
    a->add_option("--d-um", o.d_um, "ion height (default: from params)");
    a->add_option("--v", o.v, "rf voltage (default: from params)");
  };
  auto* layout = mp->add_subcommand("layout", "electrode strips as geometry JSON");
  spec_opts(layout);
  leaves.push_back({layout, {"json"}, cmd_multipole_layout});
  auto* mfield = mp->add_subcommand("field", "potential and field at a point");
  spec_opts(mfield);
  mfield->add_option("--y-um", o.y_um);
  mfield->add_option("--z-um", o.z_um);
  leaves.push_back({mfield, {"json", "csv"}, cmd_multipole_field});
  auto* mstr = mp->add_subcommand("strength", "leading multipole coefficient");
  spec_opts(mstr);
  leaves.push_back({mstr, {"json"}, cmd_multipole_strength});
  auto* mdepth = mp->add_subcommand("depth", "exact saddle and intrinsic depth");
  spec_opts(mdepth);
  mdepth->add_option("--chain", o.chain_steps, "iteration estimates to report");
  leaves.push_back({mdepth, {"json"}, cmd_multipole_depth});
  auto* table = mp->add_subcommand("table-an", "special saddle and A_n");
  table->add_option("--max-n", o.max_n);
  leaves.push_back({table, {"csv", "json"}, cmd_multipole_table});
  auto* bias = mp->add_subcommand("bias-opt", "optimal rf-electrode bias");
  spec_opts(bias);
  bias->add_option("--cells", o.cells, "grid cells across the disk");
  leaves.push_back({bias, {"json"}, cmd_multipole_bias_opt});
  auto* contours = mp->add_subcommand("ueff-contours", "U_eff / U0 on the unit disk");
  spec_opts(contours);
  contours->add_option("--vc", o.v_c);
  contours->add_option("--resolution", o.resolution);
  leaves.push_back({contours, {"csv"}, cmd_multipole_contours});

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  }

  const auto leaf = std::find_if(leaves.begin(), leaves.end(),
                                 [](const Leaf& l) { return l.app->parsed(); });
  if (leaf == leaves.end()) {
    err << app.help();
    return 1;
  }
  if (o.format.empty()) o.format = leaf->formats.front();
  if (std::find(leaf->formats.begin(), leaf->formats.end(), o.format) == leaf->formats.end()) {
    err << "error: " << leaf->app->get_name() << " does not emit " << o.format << "\n";
    return 1;
  }

  std::string text;
  try {
    text = leaf->run(o);
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const DomainError& e) {
    err << "domain error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << "\n";
    return 2;
  }

  if (o.output.empty()) {
    out << text;
  } else {
    std::ofstream f(o.output, std::ios::binary);
    if (!f || !(f << text)) {
      err << "error: cannot write " << o.output << "\n";
      return 1;
    }
  }
  return 0;
}

}  // namespace setrap::cli
