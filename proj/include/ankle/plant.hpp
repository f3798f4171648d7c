#pragma once

// Lumped one-degree-of-freedom ankle behind a series-elastic actuator, a
// position-controlled motor, and a vertically compliant walking surface.

#include <cmath>
#include <limits>
#include <numbers>

#include "ankle/error.hpp"
#include "ankle/lut.hpp"

namespace ankle {

inline constexpr double kRigid = std::numeric_limits<double>::infinity();
inline constexpr double kGravity = 9.81;

/// Surface sink in mm under `force_N` on a surface of `k_kn_per_m`
/// (kN/m equals N/mm). Rigid ground does not deflect.
inline double ground_deflection(double force_N, double k_kn_per_m) {
  require(k_kn_per_m > 0.0, ErrorKind::InvalidParameter, "ground stiffness must be positive");
  if (std::isinf(k_kn_per_m)) return 0.0;
  return force_N / k_kn_per_m;
}

struct PlantConfig {
  double sea_stiffness = 377.0;  // kN/m
  double lever_arm = 0.0275;     // m
  SyntheticMomentMap moment_map = moment_map_from_spring(377.0, 0.0275);
  double ankle_inertia = 0.001;       // kg m^2, foot about the ankle
  double ankle_damping_ratio = 1.0;   // of the ankle mode on the spring
  double ground_stiffness = kRigid;   // kN/m
  double belt_speed = 0.65;           // m/s
  double motor_loop_bandwidth = 15.0;  // Hz
  double dt = 0.01;                   // s
  int substeps = 10;
  LutRange lut_range;

  void validate() const {
    require(sea_stiffness > 0.0 && lever_arm > 0.0, ErrorKind::InvalidParameter,
            "spring stiffness and lever arm must be positive");
    require(moment_map.sigma > 0.0 && moment_map.rho > 0.0, ErrorKind::InvalidParameter,
            "moment map coefficients must be positive");
    require(ankle_inertia > 0.0 && ankle_damping_ratio >= 0.0, ErrorKind::InvalidParameter,
            "ankle inertia must be positive and damping non-negative");
    require(ground_stiffness > 0.0, ErrorKind::InvalidParameter,
            "ground stiffness must be positive");
    require(belt_speed > 0.0 && motor_loop_bandwidth > 0.0, ErrorKind::InvalidParameter,
            "belt speed and motor bandwidth must be positive");
    require(dt > 0.0 && substeps >= 1, ErrorKind::InvalidParameter,
            "dt must be positive with at least one substep");
  }

  // Angles are in degrees, so inertia and damping carry a per-degree factor.
  double inertia_per_deg() const { return ankle_inertia * std::numbers::pi / 180.0; }
  double ankle_spring() const { return moment_map.sigma * moment_map.rho; }  // Nm/deg
  double ankle_damping() const {
    return 2.0 * ankle_damping_ratio * std::sqrt(ankle_spring() * inertia_per_deg());
  }
};

struct PlantState {
  double t = 0.0;
  double x = 0.0;      // mm
  double x_dot = 0.0;  // mm/s
  double q = 0.0;      // deg
  double q_dot = 0.0;  // deg/s
  double deflection = 0.0;  // mm, ground sink under the prosthetic foot

  double moment(const PlantConfig& cfg) const { return cfg.moment_map.moment(x, q); }
};

/// Mechanical energy of the ankle on its spring, relative to the unloaded
/// angle at the current motor position (J).
inline double ankle_energy(const PlantState& s, const PlantConfig& cfg) {
  const double q0 = s.x / cfg.moment_map.rho;
  const double deg = std::numbers::pi / 180.0;
  return deg * (0.5 * cfg.inertia_per_deg() * s.q_dot * s.q_dot +
                0.5 * cfg.ankle_spring() * (s.q - q0) * (s.q - q0));
}

namespace detail {

// One trapezoidal step of y'' = f - k y - d y'. A-stable, and for k, d >= 0
// it never adds energy.
inline void trapezoid_step(double& y, double& v, double k, double d, double f, double h) {
  const double r1 = y + 0.5 * h * v;
  const double r2 = v + 0.5 * h * (-k * y - d * v) + h * f;
  const double det = 1.0 + 0.5 * h * d + 0.25 * h * h * k;
  y = (r1 * (1.0 + 0.5 * h * d) + 0.5 * h * r2) / det;
  v = (r2 - 0.5 * h * k * r1) / det;
}

}  // namespace detail

/// Advances one control period. The motor follows `motor_cmd` through a
/// critically damped loop; the ankle obeys I q'' = M(x, q) - M_ext - c q'.
inline PlantState step_plant(const PlantState& s, double motor_cmd, double external_load,
                             const PlantConfig& cfg, double vertical_force = 0.0) {
  require(cfg.dt > 0.0, ErrorKind::InvalidParameter, "dt must be positive");
  if (!std::isfinite(motor_cmd) || !std::isfinite(external_load))
    throw Error(ErrorKind::SimulationDiverged, "non-finite plant input");

  const double h = cfg.dt / cfg.substeps;
  const double wm = 2.0 * std::numbers::pi * cfg.motor_loop_bandwidth;
  const double inertia = cfg.inertia_per_deg();
  const double k_q = cfg.ankle_spring() / inertia;
  const double d_q = cfg.ankle_damping() / inertia;
  const double sigma = cfg.moment_map.sigma;

  PlantState n = s;
  for (int i = 0; i < cfg.substeps; ++i) {
    const double x_prev = n.x;
    detail::trapezoid_step(n.x, n.x_dot, wm * wm, 2.0 * wm, wm * wm * motor_cmd, h);
    const double x_mid = 0.5 * (x_prev + n.x);
    detail::trapezoid_step(n.q, n.q_dot, k_q, d_q, (sigma * x_mid - external_load) / inertia, h);
  }
  n.t = s.t + cfg.dt;
  n.deflection = ground_deflection(vertical_force, cfg.ground_stiffness);
  if (!std::isfinite(n.x) || !std::isfinite(n.q) || !std::isfinite(n.x_dot) ||
      !std::isfinite(n.q_dot))
    throw Error(ErrorKind::SimulationDiverged, "plant state became non-finite");
  return n;
}

}  // namespace ankle
