#pragma once

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "setrap/error.hpp"
#include "setrap/surface_field.hpp"
#include "setrap/units.hpp"

namespace setrap::cli {

using Json = nlohmann::ordered_json;

inline constexpr const char* schema = "setrap/1";

// Unreadable or malformed input files are usage errors, not domain errors.
struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// 9 significant digits, the only float format used on output.
inline std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

// Rounds through fmt so the JSON writer emits at most 9 significant digits.
inline Json num(double v) {
  if (!std::isfinite(v)) return nullptr;
  return std::strtod(fmt(v).c_str(), nullptr);
}

inline Json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path);
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw InputError(path + ": " + e.what());
  }
}

inline double field(const Json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_number()) {
    throw DomainError(std::string("missing numeric field '") + key + "'");
  }
  return j[key].get<double>();
}

// {"rf_frequency_hz", "rf_voltage_v", "ion_mass_amu", "ion_charge_e", "height_um"}
inline TrapParams params_from_json(const Json& j) {
  return TrapParams::from_lab_units(field(j, "rf_frequency_hz"), field(j, "rf_voltage_v"),
                                    field(j, "ion_mass_amu"), field(j, "ion_charge_e"),
                                    field(j, "height_um"));
}

inline TrapParams default_params() {
  return TrapParams::from_lab_units(100e6, 100.0, 10.0, 1.0, 100.0);
}

inline TrapParams load_params(const std::string& path) {
  if (path.empty()) return default_params();
  return params_from_json(read_json(path));
}

inline Vec2 point_um(const Json& j) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
    throw DomainError("expected a point [x, y] in um");
  }
  return {j[0].get<double>() * constants::micrometer, j[1].get<double>() * constants::micrometer};
}

// null means unbounded on that side.
inline double edge_um(const Json& j, const char* key, double unbounded) {
  if (!j.contains(key)) throw DomainError(std::string("strip needs '") + key + "'");
  if (j[key].is_null()) return unbounded;
  return field(j, key) * constants::micrometer;
}

inline PlanarRegion region_from_json(const Json& r) {
  const std::string shape = r.value("shape", "");
  const double v = field(r, "voltage_v");
  const double um = constants::micrometer;
  if (shape == "polygon") {
    if (!r.contains("vertices_um") || !r["vertices_um"].is_array()) {
      throw DomainError("polygon needs 'vertices_um'");
    }
    std::vector<Vec2> verts;
    for (const auto& p : r["vertices_um"]) verts.push_back(point_um(p));
    return make_polygon(std::move(verts), v);
  }
  if (shape == "disk") {
    return make_disk(point_um(r.at("center_um")), field(r, "radius_um") * um, v);
  }
  if (shape == "annulus") {
    return make_annulus(point_um(r.at("center_um")), field(r, "inner_um") * um,
                        field(r, "outer_um") * um, v);
  }
  if (shape == "strip") {
    const double inf = std::numeric_limits<double>::infinity();
    return make_strip(edge_um(r, "y1_um", -inf), edge_um(r, "y2_um", inf), v);
  }
  throw DomainError("unknown shape '" + shape + "'");
}

inline std::vector<PlanarRegion> geometry_from_json(const Json& j) {
  if (!j.contains("regions") || !j["regions"].is_array()) {
    throw DomainError("geometry needs a 'regions' array");
  }
  std::vector<PlanarRegion> out;
  try {
    for (const auto& r : j["regions"]) out.push_back(region_from_json(r));
  } catch (const Json::exception& e) {
    throw DomainError(std::string("geometry: ") + e.what());
  }
  check_no_overlap(out);
  return out;
}

inline std::vector<PlanarRegion> load_geometry(const std::string& path) {
  return geometry_from_json(read_json(path));
}

inline Json strip_json(double y1, double y2, double voltage) {
  const double um = constants::micrometer;
  Json r;
  r["shape"] = "strip";
  r["y1_um"] = std::isinf(y1) ? Json(nullptr) : num(y1 / um);
  r["y2_um"] = std::isinf(y2) ? Json(nullptr) : num(y2 / um);
  r["voltage_v"] = num(voltage);
  return r;
}

}  // namespace setrap::cli
