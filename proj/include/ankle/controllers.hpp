#pragma once

// Tibia controller (TC) and admittance controller (AC) as 100 Hz discrete
// state machines that turn prosthesis measurements into motor commands.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>

#include "ankle/error.hpp"
#include "ankle/lut.hpp"

namespace ankle {

enum class ControlMode { TC, AC };

inline const char* mode_name(ControlMode m) { return m == ControlMode::TC ? "TC" : "AC"; }

inline ControlMode parse_mode(const std::string& s) {
  if (s == "TC" || s == "tc") return ControlMode::TC;
  if (s == "AC" || s == "ac") return ControlMode::AC;
  throw Error(ErrorKind::InvalidParameter, "unknown controller mode '" + s + "'");
}

struct ProsthesisState {
  double x = 0.0;            // motor position, mm
  double q = 0.0;            // ankle angle, deg (dorsiflexion positive)
  double M = 0.0;            // ankle moment, Nm
  double tibia_omega = 0.0;  // tibia angular velocity, deg/s
};

struct AdmittanceParams {
  double K_d = 10.0;  // Nm/deg
  double B_d = 0.0;   // Nm*s/deg, must stay zero
  double I_d = 0.0;   // Nm*s^2/deg, must stay zero
  double K = 0.45;    // feedback gain, mm/deg

  void validate() const {
    require(std::isfinite(K_d) && K_d > 0.0, ErrorKind::InvalidParameter,
            "desired stiffness K_d must be positive");
    require(B_d == 0.0 && I_d == 0.0, ErrorKind::InvalidParameter,
            "admittance damping and inertia are fixed at zero");
    require(std::isfinite(K) && K >= 0.0, ErrorKind::InvalidParameter,
            "feedback gain must be non-negative");
  }
};

// ---------------------------------------------------------------------------
// Phase-plane gait estimator
// ---------------------------------------------------------------------------

struct TibiaPhaseConfig {
  double leak_tau = 2.0;          // s, leaky integration of omega
  double mean_tau = 2.0;          // s, running mean removed from the tibia angle
  double nominal_period = 1.47;   // s, seeds the omega scale and the phase offset
  double stride_calibration = 0.0325;  // m of stride per deg of orbit radius
  double ssp = 0.9555;            // m, self-selected-pace stride length
  std::optional<double> phase_offset;  // rad; default compensates both filters

  double offset() const {
    if (phase_offset) return *phase_offset;
    const double w = 2.0 * std::numbers::pi / nominal_period;
    // The leaky integrator and the mean removal both advance the angle's phase.
    return (std::numbers::pi / 2.0 - std::atan(w * leak_tau)) + std::atan(1.0 / (w * mean_tau));
  }
};

struct TibiaPhaseState {
  double theta_integral = 0.0;  // deg, leaky-integrated tibia angle
  double theta_mean = 0.0;      // deg
  double phase_angle = 0.0;     // rad in [0, 2pi)
  double gait_percent = 0.0;    // [0, 1)
  double stride_length = 0.0;   // m
  double ssp = 0.9555;          // m
  double L_s_norm = 1.0;

  // estimator internals
  double omega_scale = 0.0;  // rad/s; 0 means "not yet seeded"
  double unwrapped = 0.0;    // rad of accumulated forward progress
  bool started = false;
  long strides = 0;
  double sum_radius = 0.0;
  double sum_omega2 = 0.0;
  double sum_theta2 = 0.0;
  long samples_in_stride = 0;
};

inline TibiaPhaseState initial_phase_state(const TibiaPhaseConfig& cfg) {
  require(cfg.ssp > 0.0, ErrorKind::InvalidParameter, "SSP must be positive");
  require(cfg.nominal_period > 0.0 && cfg.leak_tau > 0.0 && cfg.mean_tau > 0.0,
          ErrorKind::InvalidParameter, "phase estimator time constants must be positive");
  TibiaPhaseState s;
  s.ssp = cfg.ssp;
  s.stride_length = cfg.ssp;
  s.L_s_norm = 1.0;
  s.omega_scale = 2.0 * std::numbers::pi / cfg.nominal_period;
  return s;
}

inline double wrap_pi(double a) {
  a = std::fmod(a + std::numbers::pi, 2.0 * std::numbers::pi);
  if (a < 0.0) a += 2.0 * std::numbers::pi;
  return a - std::numbers::pi;
}

/// One estimator tick. The orbit is drawn in the plane
/// (theta - running mean, omega / omega_scale); its polar angle, measured
/// forward from the foot-strike offset and never allowed to run backwards,
/// is the gait phase. Each completed revolution refreshes the stride length
/// (mean orbit radius times the calibration) and the omega scale (RMS ratio).
inline TibiaPhaseState tibia_phase_update(const TibiaPhaseState& state, double omega, double dt,
                                          const TibiaPhaseConfig& cfg) {
  require(dt > 0.0, ErrorKind::InvalidParameter, "dt must be positive");
  require(std::isfinite(omega), ErrorKind::InvalidParameter, "tibia omega must be finite");
  if (omega == 0.0) return state;

  TibiaPhaseState s = state;
  s.theta_integral += (omega - s.theta_integral / cfg.leak_tau) * dt;
  s.theta_mean += (s.theta_integral - s.theta_mean) * dt / cfg.mean_tau;
  const double theta_c = s.theta_integral - s.theta_mean;
  const double omega_n = omega / s.omega_scale;
  const double angle = std::atan2(theta_c, omega_n);

  const double target = angle - cfg.offset();
  if (!s.started) {
    s.started = true;
    s.unwrapped = std::fmod(target + 4.0 * std::numbers::pi, 2.0 * std::numbers::pi);
  } else {
    // Measured against the held estimate, so a backward excursion is undone
    // once the orbit moves forward again.
    const double step = wrap_pi(target - s.unwrapped);
    if (step > 0.0) s.unwrapped += step;
  }

  s.sum_radius += std::hypot(theta_c, omega_n);
  s.sum_omega2 += omega * omega;
  s.sum_theta2 += theta_c * theta_c;
  ++s.samples_in_stride;

  const double revolutions = s.unwrapped / (2.0 * std::numbers::pi);
  const auto completed = static_cast<long>(std::floor(revolutions));
  if (completed > s.strides) {
    s.strides = completed;
    if (s.samples_in_stride > 0) {
      s.stride_length = cfg.stride_calibration * s.sum_radius / static_cast<double>(s.samples_in_stride);
      if (s.sum_theta2 > 0.0) {
        // omega in deg/s over theta in deg gives rad/s once the orbit is circular.
        s.omega_scale = std::sqrt(s.sum_omega2 / s.sum_theta2);
      }
    }
    s.sum_radius = s.sum_omega2 = s.sum_theta2 = 0.0;
    s.samples_in_stride = 0;
  }
  s.gait_percent = revolutions - std::floor(revolutions);
  if (s.gait_percent >= 1.0) s.gait_percent = 0.0;
  s.phase_angle = 2.0 * std::numbers::pi * s.gait_percent;
  s.L_s_norm = std::max(0.0, s.stride_length / s.ssp);
  return s;
}

// ---------------------------------------------------------------------------
// Control laws
// ---------------------------------------------------------------------------

/// Blend weight a = 0.5 cos(pi L) + 0.5, applied only below unit stride length.
inline double blend_weight(double L_s_norm) {
  if (L_s_norm >= 1.0) return 0.0;
  return 0.5 * std::cos(std::numbers::pi * L_s_norm) + 0.5;
}

inline double blend_commands(double x_m, double x_g, double L_s_norm) {
  require(std::isfinite(x_m) && std::isfinite(x_g), ErrorKind::InvalidParameter,
          "blend inputs must be finite");
  require(L_s_norm >= 0.0, ErrorKind::InvalidParameter, "normalized stride length must be >= 0");
  if (L_s_norm >= 1.0) return x_g;
  const double a = blend_weight(L_s_norm);
  return a * x_m + (1.0 - a) * x_g;
}

inline double clamp_motor(double x, const Lut2D& moment_lut) {
  return std::clamp(x, moment_lut.min_a(), moment_lut.max_a());
}

inline double clamp_angle(double q, const Lut2D& moment_lut) {
  return std::clamp(q, moment_lut.min_b(), moment_lut.max_b());
}

// Proportional stand-in for the device's moment feedback block.
inline double moment_feedback(double M, double k_m, const Lut2D& moment_lut) {
  require(std::isfinite(M), ErrorKind::InvalidParameter, "moment must be finite");
  return clamp_motor(k_m * M, moment_lut);
}

struct Saturating {
  double value = 0.0;
  bool saturated = false;
};

// Inversion that falls back to the nearest slice end when the target is
// outside the reachable range.
inline Saturating invert_saturating(const Lut2D& lut, double target, LutAxis free_axis,
                                    double fixed) {
  const auto& free = free_axis == LutAxis::A ? lut.axis_a() : lut.axis_b();
  const double lo_val = free_axis == LutAxis::A ? lut.eval(free.front(), fixed)
                                                : lut.eval(fixed, free.front());
  const double hi_val = free_axis == LutAxis::A ? lut.eval(free.back(), fixed)
                                                : lut.eval(fixed, free.back());
  const double vmin = std::min(lo_val, hi_val);
  const double vmax = std::max(lo_val, hi_val);
  if (target < vmin || target > vmax) {
    const bool want_low_value = target < vmin;
    const bool low_at_front = lo_val < hi_val;
    return {want_low_value == low_at_front ? free.front() : free.back(), true};
  }
  return {lut.invert(target, free_axis, fixed), false};
}

inline double tibia_reference_motor(double gait_percent, double L_s, const Lut2D& gait_lut,
                                    const Lut2D& moment_lut) {
  const double q_ref = gait_lut.eval(gait_percent, L_s);
  return moment_lut.invert(0.0, LutAxis::A, q_ref);
}

/// Unloaded angle at motor position x_d_tc: the zero of the moment slice.
inline double admittance_equilibrium(double x_d_tc, const Lut2D& moment_lut) {
  return moment_lut.invert(0.0, LutAxis::B, x_d_tc);
}

inline double admittance_target(double q_e, double M, double K_d,
                                const Lut2D* moment_lut = nullptr) {
  require(K_d > 0.0, ErrorKind::InvalidParameter, "K_d must be positive");
  const double q_d = q_e + M / K_d;
  return moment_lut ? clamp_angle(q_d, *moment_lut) : q_d;
}

struct AnkleCommand {
  double x_ff = 0.0;
  double x_fb = 0.0;
  double x_cmd = 0.0;
  bool saturated = false;
};

/// Feedforward through the moment table inverted at (q_d, M) plus a
/// proportional angle correction.
inline AnkleCommand ankle_controller(double q_d, double q, double M, const Lut2D& moment_lut,
                                     double K) {
  require(q_d >= moment_lut.min_b() && q_d <= moment_lut.max_b(), ErrorKind::DomainError,
          "desired angle outside the table's angular range");
  const auto ff = invert_saturating(moment_lut, M, LutAxis::A, q_d);
  AnkleCommand c;
  c.x_ff = ff.value;
  c.x_fb = K * (q_d - q);
  const double raw = c.x_ff + c.x_fb;
  c.x_cmd = clamp_motor(raw, moment_lut);
  c.saturated = ff.saturated || c.x_cmd != raw;
  return c;
}

struct ControllerLuts {
  Lut2D moment;  // axis a: motor position (mm), axis b: ankle angle (deg)
  Lut2D gait;    // axis a: gait percent [0, 1], axis b: stride length (m); deg
};

struct ControlOutput {
  double x_cmd = 0.0;
  double x_tc = 0.0;  // tibia controller command
  double q_u = 0.0;   // unloaded reference angle
  double q_d = 0.0;   // desired angle (AC) or q_u (TC)
  bool saturated = false;
};

/// One controller evaluation in the wiring of the two block diagrams. Pure:
/// everything time-varying arrives through `state` and `phase`.
inline ControlOutput step_controller(ControlMode mode, const ProsthesisState& state,
                                     const TibiaPhaseState& phase, const AdmittanceParams& params,
                                     const ControllerLuts& luts, double k_m = 0.1) {
  const auto& mlut = luts.moment;
  const double gp = std::clamp(phase.gait_percent, luts.gait.min_a(), luts.gait.max_a());
  const double Ls = std::clamp(phase.stride_length, luts.gait.min_b(), luts.gait.max_b());
  const double q_ref = clamp_angle(luts.gait.eval(gp, Ls), mlut);
  const auto x_g = invert_saturating(mlut, 0.0, LutAxis::A, q_ref);
  const double x_m = moment_feedback(state.M, k_m, mlut);
  const double x_tc = clamp_motor(blend_commands(x_m, x_g.value, phase.L_s_norm), mlut);

  ControlOutput out;
  out.x_tc = x_tc;
  const auto q_u = invert_saturating(mlut, 0.0, LutAxis::B, x_tc);
  out.q_u = q_u.value;
  if (mode == ControlMode::TC) {
    out.q_d = q_u.value;
    out.x_cmd = x_tc;
    out.saturated = x_g.saturated;
    return out;
  }
  params.validate();
  out.q_d = admittance_target(q_u.value, state.M, params.K_d, &mlut);
  const auto cmd = ankle_controller(out.q_d, clamp_angle(state.q, mlut), state.M, mlut, params.K);
  out.x_cmd = cmd.x_cmd;
  out.saturated = cmd.saturated || q_u.saturated;
  return out;
}

// ---------------------------------------------------------------------------
// Stateful wrapper used by the closed-loop simulation
// ---------------------------------------------------------------------------

struct ControllerConfig {
  ControlMode mode = ControlMode::AC;
  AdmittanceParams admittance;
  double k_m = 0.1;  // mm/Nm
  TibiaPhaseConfig phase;

  void validate() const {
    if (mode == ControlMode::AC) admittance.validate();
    require(std::isfinite(k_m), ErrorKind::InvalidParameter, "k_m must be finite");
  }
};

struct ControlLogRecord {
  double t = 0.0;
  ControlMode mode = ControlMode::TC;
  ProsthesisState state;
  double gait_percent = 0.0;
  double L_s = 0.0;
  double q_d = 0.0;
  double x_cmd = 0.0;
};

class AnkleController {
 public:
  AnkleController(ControllerConfig cfg, ControllerLuts luts)
      : cfg_(std::move(cfg)), luts_(std::move(luts)), phase_(initial_phase_state(cfg_.phase)) {
    cfg_.validate();
  }

  ControlLogRecord tick(double t, const ProsthesisState& measured, double dt) {
    phase_ = tibia_phase_update(phase_, measured.tibia_omega, dt, cfg_.phase);
    const auto out = step_controller(cfg_.mode, measured, phase_, cfg_.admittance, luts_, cfg_.k_m);
    return {t, cfg_.mode, measured, phase_.gait_percent, phase_.stride_length, out.q_d, out.x_cmd};
  }

  const TibiaPhaseState& phase() const noexcept { return phase_; }
  const ControllerLuts& luts() const noexcept { return luts_; }
  const ControllerConfig& config() const noexcept { return cfg_; }

 private:
  ControllerConfig cfg_;
  ControllerLuts luts_;
  TibiaPhaseState phase_;
};

// ---------------------------------------------------------------------------
// Synthetic gait table: reference ankle angle over (gait percent, stride length)
// ---------------------------------------------------------------------------

/// Reference ankle angle (deg) at unit stride length. Flat through mid and
/// terminal stance, a short plantarflexion at loading, push-off plantarflexion
/// from 54 % of the cycle and a return to neutral during swing.
inline double reference_ankle_profile(double g) {
  auto bump = [](double u) { return 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * u); };
  if (g < 0.08) return -2.0 * bump(g / 0.08);
  if (g < 0.54) return 0.0;
  if (g < 0.84) return -12.0 * bump((g - 0.54) / 0.30);
  return 0.0;
}

inline Lut2D build_gait_lut(double ssp, double stride_max = 2.0, std::size_t n_percent = 201,
                            std::size_t n_length = 21) {
  require(ssp > 0.0, ErrorKind::InvalidParameter, "SSP must be positive");
  std::vector<double> gp(n_percent);
  std::vector<double> ls(n_length);
  for (std::size_t i = 0; i < n_percent; ++i) gp[i] = static_cast<double>(i) / (n_percent - 1);
  for (std::size_t j = 0; j < n_length; ++j) ls[j] = stride_max * static_cast<double>(j) / (n_length - 1);
  std::vector<double> v;
  v.reserve(n_percent * n_length);
  for (double g : gp)
    for (double L : ls) v.push_back(std::min(L / ssp, 1.5) * reference_ankle_profile(g));
  return Lut2D(std::move(gp), std::move(ls), std::move(v), {}, "fraction", "m");
}

}  // namespace ankle
