#pragma once

// Synthetic treadmill trials: a kinematic gait template for pelvis, heel and
// centre of pressure, with the prosthetic (left) ankle simulated in closed
// loop with its controller.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "ankle/controllers.hpp"
#include "ankle/error.hpp"
#include "ankle/plant.hpp"

namespace ankle {

struct Vec3 {
  double ml = 0.0;
  double ap = 0.0;
  double vt = 0.0;
};

inline Vec3 operator+(Vec3 a, Vec3 b) { return {a.ml + b.ml, a.ap + b.ap, a.vt + b.vt}; }

struct MarkerFrame {
  Vec3 lasi, rasi, lpsi, rpsi, lheel;
};

struct CopSample {
  double ml = 0.0;          // mm
  double ap = 0.0;          // mm
  double fz = 0.0;          // N
  double deflection = 0.0;  // mm of ground sink under this foot
};

struct TrialRecording {
  double rate = 100.0;
  std::vector<MarkerFrame> markers;
  std::vector<CopSample> cop_left, cop_right;
  std::vector<ProsthesisState> prosthesis;
  std::vector<ControlLogRecord> control;
  std::vector<std::size_t> events_left, events_right;
  std::size_t excluded_strides = 25;
  double body_mass = 58.98;

  std::size_t size() const noexcept { return markers.size(); }

  void validate() const {
    const std::size_t n = markers.size();
    require(cop_left.size() == n && cop_right.size() == n && prosthesis.size() == n,
            ErrorKind::Schema, "trial channels differ in length");
    require(control.empty() || control.size() == n, ErrorKind::Schema,
            "controller log differs in length");
    for (const auto* ev : {&events_left, &events_right}) {
      for (std::size_t k = 0; k < ev->size(); ++k) {
        require((*ev)[k] < n, ErrorKind::Schema, "event index past the end of the trial");
        require(k == 0 || (*ev)[k - 1] < (*ev)[k], ErrorKind::Schema,
                "events must be strictly increasing");
      }
    }
  }
};

enum class PerturbationKind { StiffnessStep, LoadImpulse };

struct Perturbation {
  PerturbationKind kind = PerturbationKind::StiffnessStep;
  std::size_t at_stride = 0;
  double magnitude = 0.0;  // kN/m added to the ground, or Nm of extra load
};

/// Shape parameters of the kinematic template (mm, deg, Nm).
struct GaitTemplate {
  double stance_fraction = 0.62;   // foot contact as a fraction of the stride
  double com_height = 990.0;
  double com_ml_amplitude = 22.0;
  double com_ap_amplitude = 10.0;
  double com_vt_amplitude = 12.0;
  double step_half_width = 90.0;
  double heel_strike_ap = 250.0;   // heel position at touchdown, ahead of the CoM
  double heel_height = 40.0;
  double heel_clearance = 110.0;   // peak swing height above the floor
  double foot_length = 220.0;      // heel-to-toe CoP travel
  double tibia_amplitude = 30.0;   // deg
  double peak_ankle_moment = 80.0;
};

struct TrialSpec {
  PlantConfig plant;
  ControllerConfig controller;
  GaitTemplate gait;
  std::size_t n_strides = 200;
  double stride_period = 1.47;       // s
  std::uint64_t seed = 1;
  double period_jitter = 0.02;       // relative sd per stride
  double amplitude_jitter = 0.03;    // relative sd per stride
  double sway_noise = 0.3;           // mm, sd of the slow pelvis drift
  double marker_noise = 0.05;        // mm, white noise on every marker
  double step_width_jitter = 6.0;    // mm, sd of foot placement
  double body_mass = 58.98;          // kg
  double peak_force_ratio = 1.1;     // peak vertical force over body weight
  double peak_vertical_force = 0.0;  // N; overrides the ratio when positive
  std::size_t excluded_strides = 25;
  std::vector<Perturbation> perturbations;

  double peak_force() const {
    return peak_vertical_force > 0.0 ? peak_vertical_force
                                     : peak_force_ratio * body_mass * kGravity;
  }

  void validate() const {
    plant.validate();
    controller.validate();
    require(n_strides >= 1, ErrorKind::InvalidParameter, "n_strides must be >= 1");
    require(stride_period > 0.0, ErrorKind::InvalidParameter, "stride period must be positive");
    require(period_jitter >= 0.0 && period_jitter < 0.2 && amplitude_jitter >= 0.0 &&
                amplitude_jitter < 0.5 && sway_noise >= 0.0 && marker_noise >= 0.0 &&
                step_width_jitter >= 0.0,
            ErrorKind::InvalidParameter, "noise levels must be non-negative and moderate");
    require(body_mass > 0.0 && peak_force() > 0.0, ErrorKind::InvalidParameter,
            "body mass and load must be positive");
    require(gait.stance_fraction > 0.5 && gait.stance_fraction < 1.0,
            ErrorKind::InvalidParameter, "stance fraction must lie in (0.5, 1)");
    for (const auto& p : perturbations)
      require(p.at_stride < n_strides, ErrorKind::InvalidParameter,
              "perturbation stride outside the trial");
  }
};

inline TrialSpec inject_perturbation(TrialSpec spec, PerturbationKind kind, std::size_t at_stride,
                                     double magnitude) {
  require(at_stride < spec.n_strides, ErrorKind::InvalidParameter,
          "perturbation stride outside the trial");
  spec.perturbations.push_back({kind, at_stride, magnitude});
  return spec;
}

// ---------------------------------------------------------------------------
// Template shapes. `s` is progress through stance in [0, 1), `g` through the
// stride in [0, 1) from the left foot-strike.
// ---------------------------------------------------------------------------

/// Double-hump vertical force with unit peaks at s near 0.24 and 0.76, a
/// 0.6 valley at mid-stance and zero at both ends.
inline double vertical_force_shape(double s) {
  if (s <= 0.0 || s >= 1.0) return 0.0;
  return (std::sin(std::numbers::pi * s) + 0.4 * std::sin(3.0 * std::numbers::pi * s)) / 0.9929380272;
}

/// Ankle load over the stride: a constant-rate rise through mid and terminal
/// stance to the peak at 55 %, released by 62 %. Unit peak.
inline double ankle_load_shape(double g) {
  constexpr double g0 = 0.02, g1 = 0.10, gp = 0.55, ge = 0.62;
  constexpr double slope = 1.0 / ((gp - g1) + 0.5 * (g1 - g0));
  if (g <= g0 || g >= ge) return 0.0;
  if (g < g1) return 0.5 * slope * (g - g0) * (g - g0) / (g1 - g0);
  if (g < gp) return slope * (0.5 * (g1 - g0) + (g - g1));
  return 0.5 + 0.5 * std::cos(std::numbers::pi * (g - gp) / (ge - gp));
}

struct ComShape {
  double ml, ap, vt;
};

inline ComShape com_shape(double g, const GaitTemplate& t) {
  constexpr double tau = 2.0 * std::numbers::pi;
  return {
      -t.com_ml_amplitude * (std::sin(tau * g) + 0.18 * std::sin(3.0 * tau * g + 0.4)),
      t.com_ap_amplitude * (std::sin(2.0 * tau * g + 0.3) + 0.3 * std::sin(tau * g + 1.1) +
                            0.25 * std::sin(4.0 * tau * g)),
      t.com_vt_amplitude * (std::cos(2.0 * tau * (g - 0.25)) + 0.3 * std::cos(4.0 * tau * g + 0.5)),
  };
}

// Pelvis marker offsets from the CoM; they sum to zero so the marker mean is
// the CoM itself.
inline constexpr Vec3 kLasi{-120.0, 80.0, 20.0};
inline constexpr Vec3 kRasi{120.0, 80.0, 20.0};
inline constexpr Vec3 kLpsi{-50.0, -80.0, -20.0};
inline constexpr Vec3 kRpsi{50.0, -80.0, -20.0};

namespace detail {

struct StrideDraw {
  std::size_t start = 0;
  std::size_t length = 0;
  double amplitude = 1.0;
  double width_left = 0.0;
  double width_right = 0.0;
};

// Slow random drift: AR(1) smoothed by a one-pole filter.
class Drift {
 public:
  Drift(double sd, std::mt19937_64& rng) : sd_(sd), rng_(&rng) {}
  double next() {
    if (sd_ == 0.0) return 0.0;
    e_ = 0.98 * e_ + sd_ * std::sqrt(1.0 - 0.98 * 0.98) * n01_(*rng_);
    s_ = 0.9 * s_ + 0.1 * e_;
    return s_;
  }

 private:
  double sd_;
  std::mt19937_64* rng_;
  std::normal_distribution<double> n01_;
  double e_ = 0.0;
  double s_ = 0.0;
};

}  // namespace detail

/// Runs the template and the closed prosthesis loop for `spec.n_strides`
/// strides. The recording ends on the final foot-strike sample, so there are
/// n_strides + 1 left events. Deterministic per spec (including seed).
inline TrialRecording generate_trial(const TrialSpec& spec) {
  spec.validate();
  const auto& tp = spec.gait;
  const double rate = 1.0 / spec.plant.dt;

  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> n01;

  std::vector<detail::StrideDraw> strides(spec.n_strides);
  std::size_t cursor = 0;
  for (auto& s : strides) {
    const double period = spec.stride_period * (1.0 + spec.period_jitter * n01(rng));
    s.start = cursor;
    s.length = static_cast<std::size_t>(std::lround(period * rate));
    require(s.length >= 20, ErrorKind::InvalidParameter, "stride shorter than 20 samples");
    cursor += s.length;
    s.amplitude = 1.0 + spec.amplitude_jitter * n01(rng);
    s.width_left = spec.step_width_jitter * n01(rng);
    s.width_right = spec.step_width_jitter * n01(rng);
  }
  const std::size_t n_samples = cursor + 1;

  double k_ground = spec.plant.ground_stiffness;
  std::vector<double> stride_ground(spec.n_strides);
  std::vector<double> stride_impulse(spec.n_strides, 0.0);
  for (std::size_t k = 0; k < spec.n_strides; ++k) {
    for (const auto& p : spec.perturbations) {
      if (p.at_stride != k) continue;
      if (p.kind == PerturbationKind::StiffnessStep) {
        if (!std::isinf(k_ground) && p.magnitude != 0.0) k_ground += p.magnitude;
        require(k_ground > 0.0, ErrorKind::InvalidParameter,
                "stiffness step leaves the ground with non-positive stiffness");
      } else {
        stride_impulse[k] += p.magnitude;
      }
    }
    stride_ground[k] = k_ground;
  }

  TrialRecording rec;
  rec.rate = rate;
  rec.excluded_strides = std::min(spec.excluded_strides, spec.n_strides);
  rec.body_mass = spec.body_mass;
  rec.markers.resize(n_samples);
  rec.cop_left.resize(n_samples);
  rec.cop_right.resize(n_samples);
  rec.prosthesis.resize(n_samples);
  rec.control.resize(n_samples);
  for (const auto& s : strides) {
    rec.events_left.push_back(s.start);
    rec.events_right.push_back(s.start + s.length / 2);
  }
  rec.events_left.push_back(cursor);

  std::vector<detail::Drift> drift;
  for (int axis = 0; axis < 3; ++axis) drift.emplace_back(spec.sway_noise, rng);
  std::normal_distribution<double> marker(0.0, 1.0);
  auto jitter = [&]() { return spec.marker_noise == 0.0 ? 0.0 : spec.marker_noise * marker(rng); };

  ControllerLuts luts{build_moment_lut(spec.plant.moment_map, spec.plant.lut_range),
                      build_gait_lut(spec.controller.phase.ssp)};
  AnkleController controller(spec.controller, luts);
  PlantState plant;
  const double peak_force = spec.peak_force();
  const double belt = spec.plant.belt_speed * 1000.0;  // mm/s
  const double stance = tp.stance_fraction;

  std::size_t k = 0;
  for (std::size_t n = 0; n < n_samples; ++n) {
    while (k + 1 < strides.size() && n >= strides[k + 1].start) ++k;
    const auto& st = strides[k];
    const double g = std::min(static_cast<double>(n - st.start) / st.length, 1.0);
    const double period = static_cast<double>(st.length) / rate;
    const double next_amp = k + 1 < strides.size() ? strides[k + 1].amplitude : st.amplitude;
    const double amp = st.amplitude + (next_amp - st.amplitude) * g;
    const double t_in = g * period;

    // Left foot (prosthesis side): stance from g = 0 to the stance fraction.
    const bool left_stance = g < stance;
    const double sl = g / stance;
    const double f_left = left_stance ? peak_force * vertical_force_shape(sl) : 0.0;
    // Right foot strikes at mid-stride.
    const double gr = g >= 0.5 ? g - 0.5 : g + 0.5;
    const bool right_stance = gr < stance;
    const double sr = gr / stance;
    const double f_right = right_stance ? peak_force * vertical_force_shape(sr) : 0.0;
    // Strides before the right strike of stride k belong to stride k-1's step.
    const auto& rs = g >= 0.5 || k == 0 ? st : strides[k - 1];

    const double d_left = ground_deflection(f_left, stride_ground[k]);
    const double d_right = ground_deflection(f_right, stride_ground[k]);
    const double f_total = f_left + f_right;
    const double d_com = f_total > 0.0 ? (f_left * d_left + f_right * d_right) / f_total : 0.0;

    const auto shape = com_shape(g, tp);
    const Vec3 com{amp * shape.ml + drift[0].next(), amp * shape.ap + drift[1].next(),
                   tp.com_height + amp * shape.vt + drift[2].next() - d_com};

    auto& mf = rec.markers[n];
    mf.lasi = com + kLasi + Vec3{jitter(), jitter(), jitter()};
    mf.rasi = com + kRasi + Vec3{jitter(), jitter(), jitter()};
    mf.lpsi = com + kLpsi + Vec3{jitter(), jitter(), jitter()};
    mf.rpsi = com + kRpsi + Vec3{jitter(), jitter(), jitter()};

    // Heel: carried back by the belt in stance, swung forward in swing; the
    // anterior extreme is exactly at touchdown.
    const double stance_travel = belt * stance * period;
    double heel_ap, heel_vt;
    if (left_stance) {
      heel_ap = tp.heel_strike_ap - belt * t_in;
      const double rise = sl > 0.55 ? (sl - 0.55) / 0.45 : 0.0;
      heel_vt = tp.heel_height + 50.0 * rise * rise - d_left;
    } else {
      const double u = (g - stance) / (1.0 - stance);
      heel_ap = tp.heel_strike_ap - stance_travel * 0.5 * (1.0 + std::cos(std::numbers::pi * u));
      const double lift = tp.heel_height + 50.0;
      heel_vt = lift + (tp.heel_height - lift) * u +
                (tp.heel_clearance - tp.heel_height) * std::sin(std::numbers::pi * u);
    }
    mf.lheel = Vec3{-tp.step_half_width + st.width_left, heel_ap, heel_vt} +
               Vec3{jitter(), jitter(), jitter()};

    auto& cl = rec.cop_left[n];
    if (left_stance) {
      cl = {-tp.step_half_width + st.width_left + 15.0 * std::sin(std::numbers::pi * sl),
            heel_ap + tp.foot_length * sl, f_left, d_left};
    }
    auto& cr = rec.cop_right[n];
    if (right_stance) {
      const double tr = sr * stance * period;
      cr = {tp.step_half_width + rs.width_right - 15.0 * std::sin(std::numbers::pi * sr),
            tp.heel_strike_ap - belt * tr + tp.foot_length * sr, f_right, d_right};
    }

    // Prosthesis loop. The tibia swings sinusoidally; its angular velocity
    // peaks at foot-strike.
    const double w = 2.0 * std::numbers::pi / period;
    const double omega = tp.tibia_amplitude * amp * w * std::cos(w * t_in);
    double load = tp.peak_ankle_moment * amp * ankle_load_shape(g);
    if (left_stance && stride_impulse[k] != 0.0)
      load += stride_impulse[k] * std::sin(std::numbers::pi * sl);

    const ProsthesisState measured{plant.x, plant.q, plant.moment(spec.plant), omega};
    rec.prosthesis[n] = measured;
    rec.control[n] = controller.tick(static_cast<double>(n) / rate, measured, spec.plant.dt);
    if (n + 1 < n_samples) {
      auto cfg = spec.plant;
      cfg.ground_stiffness = stride_ground[k];
      plant = step_plant(plant, rec.control[n].x_cmd, load, cfg, f_left);
    }
  }
  rec.validate();
  return rec;
}

}  // namespace ankle
