#pragma once

// Run configuration read from JSON. Every section and key is optional, but
// unknown keys and wrong types are rejected so a typo never silently falls
// back to a default.

#include <limits>
#include <optional>
#include <set>
#include <string>

#include "ankle/analysis.hpp"
#include "ankle/io.hpp"
#include "ankle/trial.hpp"

namespace ankle {

struct RunConfig {
  TrialSpec trial;
  AnalysisConfig analysis;
  double alpha = 0.01;  // rank-sum significance level
  std::optional<fs::path> out;
  std::optional<fs::path> baseline;

  void validate() const {
    trial.validate();
    analysis.validate();
    require(alpha > 0.0 && alpha < 1.0, ErrorKind::InvalidParameter, "alpha must lie in (0, 1)");
    if (baseline)
      require(fs::exists(*baseline), ErrorKind::Io, "baseline report not found: " + baseline->string());
  }
};

namespace detail {

class Section {
 public:
  Section(const Json& j, std::string name) : j_(j), name_(std::move(name)) {
    require(j_.is_object(), ErrorKind::Schema, "config: '" + name_ + "' must be an object");
  }

  /// Call after the last lookup: any key never asked for is a typo.
  void done() const {
    for (const auto& [key, value] : j_.items())
      if (!used_.count(key)) throw Error(ErrorKind::Schema, "config: unknown key '" + path(key) + "'");
  }

  bool has(const std::string& key) {
    used_.insert(key);
    return j_.contains(key);
  }

  const Json& raw(const std::string& key) {
    used_.insert(key);
    return j_.at(key);
  }

  void number(const std::string& key, double& out) {
    if (!has(key)) return;
    const auto& v = j_.at(key);
    require(v.is_number(), ErrorKind::Schema, "config: '" + path(key) + "' must be a number");
    out = v.get<double>();
  }

  template <class Int>
  void integer(const std::string& key, Int& out) {
    if (!has(key)) return;
    const auto& v = j_.at(key);
    require(v.is_number_integer() && v.get<long long>() >= 0 &&
                static_cast<unsigned long long>(v.get<long long>()) <= std::numeric_limits<Int>::max(),
            ErrorKind::Schema, "config: '" + path(key) + "' must be a non-negative integer");
    out = static_cast<Int>(v.get<long long>());
  }

  template <class Int>
  void integer(const std::string& key, std::optional<Int>& out) {
    if (!has(key) || j_.at(key).is_null()) return;
    Int v{};
    integer(key, v);
    out = v;
  }

  void text(const std::string& key, std::string& out) {
    if (!has(key)) return;
    require(j_.at(key).is_string(), ErrorKind::Schema, "config: '" + path(key) + "' must be a string");
    out = j_.at(key).get<std::string>();
  }

  std::string path(const std::string& key) const { return name_ + "." + key; }

 private:
  const Json& j_;
  std::string name_;
  std::set<std::string> used_;
};

inline void read_controller(Section& s, ControllerConfig& c) {
  std::string mode = std::string(mode_name(c.mode));
  s.text("mode", mode);
  try {
    c.mode = parse_mode(mode);
  } catch (const Error& e) {
    throw Error(ErrorKind::Schema, "config: " + s.path("mode") + ": " + e.what());
  }
  s.number("K_d", c.admittance.K_d);
  s.number("K", c.admittance.K);
  s.number("k_m", c.k_m);
}

inline void read_plant(Section& s, PlantConfig& p) {
  if (s.has("ground_stiffness")) {
    const auto& v = s.raw("ground_stiffness");
    if (v.is_string() && v.get<std::string>() == "rigid") p.ground_stiffness = kRigid;
    else if (v.is_number()) p.ground_stiffness = v.get<double>();
    else throw Error(ErrorKind::Schema, "config: plant.ground_stiffness must be a number (kN/m) or \"rigid\"");
  }
  double rate = 1.0 / p.dt;
  s.number("sample_rate", rate);
  require(rate > 0.0, ErrorKind::InvalidParameter, "sample_rate must be positive");
  p.dt = 1.0 / rate;
  s.number("belt_speed", p.belt_speed);
  s.number("motor_loop_bandwidth", p.motor_loop_bandwidth);
  s.number("ankle_inertia", p.ankle_inertia);
  s.number("ankle_damping_ratio", p.ankle_damping_ratio);
  s.integer("substeps", p.substeps);
}

inline void read_trial(Section& s, TrialSpec& t) {
  s.integer("n_strides", t.n_strides);
  s.number("stride_period", t.stride_period);
  t.controller.phase.nominal_period = t.stride_period;
  s.integer("seed", t.seed);
  s.integer("excluded_strides", t.excluded_strides);
  s.number("body_mass", t.body_mass);
  s.number("period_jitter", t.period_jitter);
  s.number("amplitude_jitter", t.amplitude_jitter);
  s.number("sway_noise", t.sway_noise);
  s.number("marker_noise", t.marker_noise);
  s.number("step_width_jitter", t.step_width_jitter);
  s.number("peak_force_ratio", t.peak_force_ratio);
  s.number("peak_vertical_force", t.peak_vertical_force);
  if (s.has("perturbations")) {
    const auto& list = s.raw("perturbations");
    require(list.is_array(), ErrorKind::Schema, "config: trial.perturbations must be an array");
    for (std::size_t i = 0; i < list.size(); ++i) {
      Section p(list[i], "trial.perturbations[" + std::to_string(i) + "]");
      std::string kind;
      std::size_t at = 0;
      double magnitude = 0.0;
      p.text("kind", kind);
      p.integer("at_stride", at);
      p.number("magnitude", magnitude);
      p.done();
      Perturbation pert{PerturbationKind::StiffnessStep, at, magnitude};
      if (kind == "load_impulse") pert.kind = PerturbationKind::LoadImpulse;
      else require(kind == "stiffness_step", ErrorKind::Schema,
                   "config: perturbation kind must be stiffness_step or load_impulse");
      t.perturbations.push_back(pert);
    }
  }
}

inline void read_analysis(Section& s, AnalysisConfig& a) {
  s.integer("excluded_strides", a.excluded_strides);
  s.number("com_cutoff", a.com_cutoff);
  s.number("kinematic_cutoff", a.kinematic_cutoff);
  s.number("ankle_cutoff", a.ankle_cutoff);
  s.integer("cop_window", a.cop_window);
  s.integer("max_lag", a.max_lag);
  s.integer("default_tau", a.default_tau);
  s.integer("tau", a.tau);
  s.integer("dim", a.dim);
  s.integer("fnn_max_dim", a.fnn.max_dim);
  s.integer("window_strides", a.lyapunov.window_strides);
  s.integer("n_windows", a.lyapunov.n_windows);
  s.integer("points_per_window", a.lyapunov.points);
  s.integer("horizon_strides", a.lyapunov.horizon_strides);
  s.number("stance_force_fraction", a.stance_force_fraction);
  s.number("stance_fraction", a.gait.stance_fraction);
}

}  // namespace detail

inline RunConfig parse_config(const Json& j) {
  RunConfig c;
  detail::Section root(j, "config");
  if (root.has("controller")) {
    detail::Section s(root.raw("controller"), "controller");
    detail::read_controller(s, c.trial.controller);
    s.done();
  }
  if (root.has("plant")) {
    detail::Section s(root.raw("plant"), "plant");
    detail::read_plant(s, c.trial.plant);
    s.done();
  }
  if (root.has("trial")) {
    detail::Section s(root.raw("trial"), "trial");
    detail::read_trial(s, c.trial);
    s.done();
  }
  if (root.has("analysis")) {
    detail::Section s(root.raw("analysis"), "analysis");
    detail::read_analysis(s, c.analysis);
    s.done();
  }
  if (root.has("compare")) {
    detail::Section s(root.raw("compare"), "compare");
    s.number("alpha", c.alpha);
    s.done();
  }
  if (root.has("paths")) {
    detail::Section s(root.raw("paths"), "paths");
    std::string out, baseline;
    s.text("out", out);
    s.text("baseline", baseline);
    s.done();
    if (!out.empty()) c.out = out;
    if (!baseline.empty()) c.baseline = baseline;
  }
  root.done();
  return c;
}

inline RunConfig load_config(const fs::path& path) {
  auto c = parse_config(read_json(path));
  // Relative paths inside the file are taken from the file's directory.
  const auto base = path.parent_path();
  if (c.out && c.out->is_relative()) c.out = base / *c.out;
  if (c.baseline && c.baseline->is_relative()) c.baseline = base / *c.baseline;
  return c;
}

/// The effective settings, as written into manifests and reports.
inline Json config_echo(const RunConfig& c) {
  const auto& t = c.trial;
  const auto& a = c.analysis;
  Json ground = std::isinf(t.plant.ground_stiffness) ? Json("rigid") : Json(t.plant.ground_stiffness);
  return {
      {"controller",
       {{"mode", std::string(mode_name(t.controller.mode))},
        {"K_d", t.controller.admittance.K_d},
        {"K", t.controller.admittance.K},
        {"k_m", t.controller.k_m}}},
      {"plant",
       {{"ground_stiffness", ground},
        {"sample_rate", 1.0 / t.plant.dt},
        {"belt_speed", t.plant.belt_speed},
        {"motor_loop_bandwidth", t.plant.motor_loop_bandwidth},
        {"ankle_inertia", t.plant.ankle_inertia},
        {"ankle_damping_ratio", t.plant.ankle_damping_ratio},
        {"substeps", t.plant.substeps}}},
      {"trial",
       {{"n_strides", t.n_strides},
        {"stride_period", t.stride_period},
        {"seed", t.seed},
        {"excluded_strides", t.excluded_strides},
        {"body_mass", t.body_mass},
        {"period_jitter", t.period_jitter},
        {"amplitude_jitter", t.amplitude_jitter},
        {"sway_noise", t.sway_noise},
        {"marker_noise", t.marker_noise},
        {"step_width_jitter", t.step_width_jitter},
        {"peak_force_ratio", t.peak_force_ratio},
        {"peak_vertical_force", t.peak_vertical_force},
        {"perturbations", [&] {
           Json list = Json::array();
           for (const auto& p : t.perturbations)
             list.push_back({{"kind", p.kind == PerturbationKind::LoadImpulse ? "load_impulse" : "stiffness_step"},
                             {"at_stride", p.at_stride},
                             {"magnitude", p.magnitude}});
           return list;
         }()}}},
      {"analysis",
       {{"excluded_strides", a.excluded_strides ? Json(*a.excluded_strides) : Json(nullptr)},
        {"com_cutoff", a.com_cutoff},
        {"kinematic_cutoff", a.kinematic_cutoff},
        {"ankle_cutoff", a.ankle_cutoff},
        {"cop_window", a.cop_window},
        {"max_lag", a.max_lag},
        {"default_tau", a.default_tau},
        {"tau", a.tau ? Json(*a.tau) : Json(nullptr)},
        {"dim", a.dim ? Json(*a.dim) : Json(nullptr)},
        {"fnn_max_dim", a.fnn.max_dim},
        {"window_strides", a.lyapunov.window_strides},
        {"n_windows", a.lyapunov.n_windows},
        {"points_per_window", a.lyapunov.points},
        {"horizon_strides", a.lyapunov.horizon_strides},
        {"stance_force_fraction", a.stance_force_fraction},
        {"stance_fraction", a.gait.stance_fraction}}},
      {"compare", {{"alpha", c.alpha}}},
  };
}

}  // namespace ankle
