#pragma once

// Trap operating parameters and the dimensionless scales derived from them.
//
// All quantities are SI internally. The two scales everything else is
// expressed in are
//
//   q0 = 4 V_rf Q / (M Omega^2 d^2)      (Mathieu-type strength scale)
//   U0 = Q^2 V_rf^2 / (4 M Omega^2 d^2)  (depth scale, U0 = Q V_rf q0 / 16)

#include <cmath>
#include <numbers>
#include <string>

#include "setrap/error.hpp"

namespace setrap {

namespace constants {
inline constexpr double pi = std::numbers::pi;
inline constexpr double atomic_mass_unit = 1.66053906660e-27;  // kg
inline constexpr double elementary_charge = 1.602176634e-19;   // C
inline constexpr double micrometer = 1e-6;
}  // namespace constants

struct TrapParams {
  double rf_angular_frequency = 0.0;  // Omega, rad/s
  double rf_peak_voltage = 0.0;       // V_rf, V
  double ion_mass = 0.0;              // M, kg
  double ion_charge = 0.0;            // Q, C
  double ion_plane_distance = 0.0;    // d, m

  // Laboratory units: ordinary rf frequency in Hz, mass in AMU, charge in
  // units of e, ion height in micrometers.
  static TrapParams from_lab_units(double rf_frequency_hz, double rf_voltage_v,
                                   double ion_mass_amu, double ion_charge_e,
                                   double height_um) {
    TrapParams p;
    p.rf_angular_frequency = 2.0 * constants::pi * rf_frequency_hz;
    p.rf_peak_voltage = rf_voltage_v;
    p.ion_mass = ion_mass_amu * constants::atomic_mass_unit;
    p.ion_charge = ion_charge_e * constants::elementary_charge;
    p.ion_plane_distance = height_um * constants::micrometer;
    return p;
  }

  void validate() const {
    auto check = [](double v, const char* name) {
      if (!(std::isfinite(v) && v > 0.0)) {
        throw DomainError(std::string("trap parameter '") + name +
                          "' must be finite and strictly positive");
      }
    };
    check(rf_angular_frequency, "rf_angular_frequency");
    check(rf_peak_voltage, "rf_peak_voltage");
    check(ion_mass, "ion_mass");
    check(ion_charge, "ion_charge");
    check(ion_plane_distance, "ion_plane_distance");
  }
};

struct ScaleFactors {
  double q0 = 0.0;
  double U0 = 0.0;                     // J
  double max_secular_frequency = 0.0;  // Hz, at q = q0 / (2 pi)

  double u0_ev() const { return U0 / constants::elementary_charge; }
};

struct SecularFrequency {
  double hz = 0.0;
  // Set when q exceeds the range where q Omega / sqrt(8) is a good
  // approximation (q > 0.3).
  bool adiabatic_warning = false;
};

inline constexpr double adiabatic_warning_q = 0.3;

// Adiabatic secular frequency q Omega / sqrt(8), as an ordinary frequency.
inline SecularFrequency secular_frequency(double q, double rf_angular_frequency) {
  if (!(q >= 0.0) || !std::isfinite(q)) {
    throw DomainError("secular_frequency: q must be finite and non-negative");
  }
  if (!(rf_angular_frequency > 0.0) || !std::isfinite(rf_angular_frequency)) {
    throw DomainError("secular_frequency: rf angular frequency must be positive");
  }
  SecularFrequency f;
  f.hz = q * rf_angular_frequency / std::sqrt(8.0) / (2.0 * constants::pi);
  f.adiabatic_warning = q > adiabatic_warning_q;
  return f;
}

inline ScaleFactors scale_factors(const TrapParams& params) {
  params.validate();
  const double omega = params.rf_angular_frequency;
  const double d = params.ion_plane_distance;
  const double denom = params.ion_mass * omega * omega * d * d;
  ScaleFactors s;
  s.q0 = 4.0 * params.rf_peak_voltage * params.ion_charge / denom;
  s.U0 = params.ion_charge * params.ion_charge * params.rf_peak_voltage *
         params.rf_peak_voltage / (4.0 * denom);
  s.max_secular_frequency =
      secular_frequency(s.q0 / (2.0 * constants::pi), omega).hz;
  return s;
}

// v_c = Q V_bias / U0, the dimensionless strength of a dc bias applied to the
// rf electrodes.
inline double control_bias_strength(double bias_voltage, const TrapParams& params) {
  if (!std::isfinite(bias_voltage)) {
    throw DomainError("control_bias_strength: bias voltage must be finite");
  }
  return params.ion_charge * bias_voltage / scale_factors(params).U0;
}

// Inverse of control_bias_strength.
inline double bias_voltage_for(double v_c, const TrapParams& params) {
  return v_c * scale_factors(params).U0 / params.ion_charge;
}

}  // namespace setrap
