#pragma once

// Whole-trial analysis: divergence exponents of the CoM velocity, margins of
// stability for both feet, and ankle quasi-stiffness with its phase portrait.

#include <array>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ankle/embedding.hpp"
#include "ankle/error.hpp"
#include "ankle/lyapunov.hpp"
#include "ankle/mos.hpp"
#include "ankle/quasi_stiffness.hpp"
#include "ankle/signal.hpp"
#include "ankle/trial.hpp"

namespace ankle {

struct AnalysisConfig {
  std::optional<std::size_t> excluded_strides;  // defaults to the recording's
  LyapunovConfig lyapunov;
  int com_filter_order = 2;
  double com_cutoff = 10.0;        // Hz, CoM before differentiation
  int kinematic_filter_order = 4;
  double kinematic_cutoff = 5.0;   // Hz, CoM and heel for MOS
  std::size_t cop_window = 10;     // samples
  int ankle_filter_order = 2;
  double ankle_cutoff = 5.0;       // Hz, prosthesis angle, moment and velocity
  std::size_t max_lag = 60;        // AMI search, normalized samples
  std::size_t default_tau = 10;    // used when AMI has no minimum
  std::optional<std::size_t> tau;  // overrides AMI
  std::optional<std::size_t> dim;  // overrides FNN
  FnnParams fnn;                   // exclusion 0 means one normalized stride
  GaitPhaseConfig gait;
  double stance_force_fraction = 0.05;  // of body weight
  FootStrikeConfig foot_strike;

  void validate() const {
    require(com_cutoff > 0.0 && kinematic_cutoff > 0.0 && ankle_cutoff > 0.0,
            ErrorKind::InvalidParameter, "filter cutoffs must be positive");
    require(com_filter_order > 0 && com_filter_order % 2 == 0 && kinematic_filter_order > 0 &&
                kinematic_filter_order % 2 == 0 && ankle_filter_order > 0 &&
                ankle_filter_order % 2 == 0,
            ErrorKind::InvalidParameter, "filter orders must be positive and even");
    require(cop_window >= 1 && max_lag >= 1 && default_tau >= 1, ErrorKind::InvalidParameter,
            "CoP window, AMI lag range and default delay must be >= 1");
    require(!tau || *tau >= 1, ErrorKind::InvalidParameter, "tau must be >= 1");
    require(!dim || (*dim >= 1 && *dim <= kMaxEmbeddingDim), ErrorKind::InvalidParameter,
            "dim must lie in [1, " + std::to_string(kMaxEmbeddingDim) + "]");
    require(lyapunov.window_strides >= 1 && lyapunov.n_windows >= 1 && lyapunov.points >= lyapunov.window_strides,
            ErrorKind::InvalidParameter, "window size, count and points must be positive");
    require(stance_force_fraction > 0.0 && stance_force_fraction < 1.0, ErrorKind::InvalidParameter,
            "stance force fraction must lie in (0, 1)");
    gait.validate();
  }
};

struct AxisStability {
  Axis axis = Axis::ML;
  std::size_t tau = 0;
  std::size_t dim = 0;
  bool tau_fallback = false;   // AMI found no minimum
  bool dim_saturated = false;  // FNN never dropped below threshold
  std::vector<double> ami;
  std::vector<double> fnn_fractions;
  WindowedLyapunov lyapunov;
};

struct SideMos {
  MosSummary ml, ap;
  std::size_t cycles = 0;
};

struct AnkleAnalysis {
  CycleAverage average;
  StiffnessProfile stiffness;
  std::vector<double> angle, velocity;  // filtered, over the analysed strides
};

struct TrialAnalysis {
  std::size_t excluded_strides = 0;
  std::size_t analyzed_strides = 0;
  std::size_t n_windows = 0;
  std::array<AxisStability, 3> axes;
  SideMos left, right;
  std::size_t detected_strikes = 0;
  double pendulum_length = 0.0;  // m
  AnkleAnalysis ankle;
  std::vector<std::string> warnings;
};

/// CoM velocity per axis (mm/s): pelvis-marker mean, low-passed, then
/// differentiated.
inline std::array<TimeSeries, 3> com_velocity(const Com3& com, int order, double cutoff) {
  const double dt = com.ml.dt();
  return {finite_difference(butterworth_lowpass(com.ml, order, cutoff), dt),
          finite_difference(butterworth_lowpass(com.ap, order, cutoff), dt),
          finite_difference(butterworth_lowpass(com.vt, order, cutoff), dt)};
}

/// Trailing moving average applied separately to each contiguous run of
/// `mask`; outside the runs the input passes through. Unloaded frames carry
/// no CoP, so averaging across a run boundary would drag it toward zero.
inline std::vector<double> masked_moving_average(std::span<const double> x, std::span<const bool> mask,
                                                 std::size_t window) {
  require(x.size() == mask.size(), ErrorKind::InvalidParameter, "signal and mask differ in length");
  require(window >= 1, ErrorKind::InvalidParameter, "moving-average window must be >= 1");
  std::vector<double> out(x.begin(), x.end());
  std::size_t run_start = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!mask[i]) continue;
    if (i == 0 || !mask[i - 1]) run_start = i;
    const std::size_t lo = std::max(run_start, i + 1 >= window ? i + 1 - window : 0);
    double sum = 0.0;
    for (std::size_t k = lo; k <= i; ++k) sum += x[k];
    out[i] = sum / static_cast<double>(i - lo + 1);
  }
  return out;
}

namespace detail {

inline AxisStability analyze_axis(const TimeSeries& velocity, std::span<const std::size_t> events,
                                  const AnalysisConfig& cfg, const LyapunovConfig& lc);

}  // namespace detail

/// Delay and dimension for one velocity axis, chosen on the first window
/// (time-normalized like every window) unless the config fixes them.
inline AxisStability select_embedding(const TimeSeries& velocity, std::span<const std::size_t> events,
                                      const AnalysisConfig& cfg, const LyapunovConfig& lc) {
  AxisStability out;
  out.axis = velocity.label();
  require(events.size() > lc.window_strides, ErrorKind::InsufficientStrides,
          "need " + std::to_string(lc.window_strides) + " strides for the embedding window");
  const auto [first, grid] =
      time_normalize(velocity, events.subspan(0, lc.window_strides + 1), lc.window_strides, lc.points);
  const auto x = first.view();

  if (cfg.tau) {
    out.tau = *cfg.tau;
  } else {
    out.ami = ami_curve(x, cfg.max_lag + 1);
    try {
      out.tau = ami_delay(x, cfg.max_lag);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::NoMinimum) throw;
      out.tau = cfg.default_tau;
      out.tau_fallback = true;
    }
  }
  if (cfg.dim) {
    out.dim = *cfg.dim;
  } else {
    FnnParams fp = cfg.fnn;
    if (fp.exclusion == 0) fp.exclusion = grid.points_per_stride;
    const auto fnn = fnn_dimension(x, out.tau, fp);
    out.dim = fnn.dim;
    out.dim_saturated = fnn.saturated;
    out.fnn_fractions = fnn.fractions;
  }
  return out;
}

namespace detail {

inline AxisStability analyze_axis(const TimeSeries& velocity, std::span<const std::size_t> events,
                                  const AnalysisConfig& cfg, const LyapunovConfig& lc) {
  auto out = select_embedding(velocity, events, cfg, lc);
  out.lyapunov = windowed_lyapunov(velocity, events, {out.tau, out.dim}, lc);
  return out;
}

inline SideMos side_mos(const TimeSeries& xcom_ml, const TimeSeries& xcom_ap,
                        std::span<const CopSample> cop, std::span<const std::size_t> strikes,
                        double threshold, std::size_t window) {
  const std::size_t n = cop.size();
  // std::vector<bool> is not contiguous, so the mask lives in a plain array.
  const auto stance = std::make_unique<bool[]>(n);
  std::vector<double> ml(n), ap(n);
  for (std::size_t i = 0; i < n; ++i) {
    stance[i] = cop[i].fz > threshold;
    ml[i] = cop[i].ml;
    ap[i] = cop[i].ap;
  }
  const std::span<const bool> mask(stance.get(), n);
  const auto ml_f = masked_moving_average(ml, mask, window);
  const auto ap_f = masked_moving_average(ap, mask, window);

  SideMos out;
  const auto cml = mos_ml(xcom_ml.view(), ml_f, mask, strikes);
  const auto cap = mos_ap(xcom_ap.view(), ap_f, mask, strikes);
  out.ml = summarize(cml);
  out.ap = summarize(cap);
  out.cycles = cml.size();
  return out;
}

}  // namespace detail

/// Quasi-stiffness of the averaged gait cycle between `events`, plus the
/// filtered angle and angular velocity over the same span for the phase
/// portrait.
inline AnkleAnalysis analyze_ankle(const TrialRecording& rec, std::span<const std::size_t> events,
                                   const AnalysisConfig& cfg) {
  require(events.size() >= 2 && events.back() < rec.prosthesis.size(), ErrorKind::InsufficientStrides,
          "need at least one complete stride of prosthesis data");
  std::vector<double> q, moment;
  for (const auto& p : rec.prosthesis) {
    q.push_back(p.q);
    moment.push_back(p.M);
  }
  const double rate = rec.rate;
  const double ac = std::min(cfg.ankle_cutoff, 0.45 * rate);
  const TimeSeries q_series(q, rate);
  const auto qf = butterworth_lowpass(q_series, cfg.ankle_filter_order, ac);
  const auto mf = butterworth_lowpass(TimeSeries(moment, rate), cfg.ankle_filter_order, ac);
  const auto qdot = butterworth_lowpass(finite_difference(q_series, 1.0 / rate), cfg.ankle_filter_order, ac);
  const auto cycles = segment_cycles(mf.view(), qf.view(), events, cfg.gait.points_per_cycle);
  AnkleAnalysis out;
  out.average = average_cycle(cycles);
  out.stiffness = quasi_stiffness(out.average, cfg.gait);
  const auto lo = static_cast<std::ptrdiff_t>(events.front());
  const auto hi = static_cast<std::ptrdiff_t>(events.back()) + 1;
  out.angle.assign(qf.samples().begin() + lo, qf.samples().begin() + hi);
  out.velocity.assign(qdot.samples().begin() + lo, qdot.samples().begin() + hi);
  return out;
}

inline TrialAnalysis analyze_trial(const TrialRecording& rec, const AnalysisConfig& cfg = {}) {
  cfg.validate();
  rec.validate();
  TrialAnalysis out;
  const double rate = rec.rate;
  out.excluded_strides = cfg.excluded_strides.value_or(rec.excluded_strides);
  require(rec.events_left.size() > out.excluded_strides + 1, ErrorKind::InsufficientStrides,
          "no strides left after excluding " + std::to_string(out.excluded_strides));
  const std::span<const std::size_t> events =
      std::span<const std::size_t>(rec.events_left).subspan(out.excluded_strides);
  out.analyzed_strides = events.size() - 1;

  LyapunovConfig lc = cfg.lyapunov;
  require(out.analyzed_strides >= lc.window_strides, ErrorKind::InsufficientStrides,
          "need " + std::to_string(lc.window_strides) + " analysed strides, got " +
              std::to_string(out.analyzed_strides));
  const std::size_t available = out.analyzed_strides - lc.window_strides + 1;
  if (available < lc.n_windows) {
    out.warnings.push_back("only " + std::to_string(available) + " window(s) of " +
                           std::to_string(lc.window_strides) + " strides fit in " +
                           std::to_string(out.analyzed_strides) + " analysed strides; " +
                           std::to_string(lc.n_windows) + " requested");
    lc.n_windows = available;
  }
  out.n_windows = lc.n_windows;

  // Divergence exponents.
  const auto com = estimate_com(rec.markers, rate);
  const auto vel = com_velocity(com, cfg.com_filter_order, cfg.com_cutoff);
  for (std::size_t a = 0; a < 3; ++a) {
    out.axes[a] = detail::analyze_axis(vel[a], events, cfg, lc);
    if (out.axes[a].tau_fallback)
      out.warnings.push_back(std::string("no AMI minimum on ") + axis_name(vel[a].label()) +
                             "; using tau = " + std::to_string(cfg.default_tau));
    if (out.axes[a].dim_saturated)
      out.warnings.push_back(std::string("FNN saturated on ") + axis_name(vel[a].label()));
  }

  // Margins of stability.
  const double kc = std::min(cfg.kinematic_cutoff, 0.45 * rate);
  const Com3 com_f{butterworth_lowpass(com.ml, cfg.kinematic_filter_order, kc),
                   butterworth_lowpass(com.ap, cfg.kinematic_filter_order, kc),
                   butterworth_lowpass(com.vt, cfg.kinematic_filter_order, kc)};
  std::vector<double> heel_vt, heel_ap;
  for (const auto& m : rec.markers) {
    heel_vt.push_back(m.lheel.vt);
    heel_ap.push_back(m.lheel.ap);
  }
  FootStrikeConfig fs = cfg.foot_strike;
  fs.cutoff = std::min(fs.cutoff, cfg.kinematic_cutoff);
  const auto strikes_all = detect_foot_strikes(TimeSeries(heel_vt, rate), TimeSeries(heel_ap, rate), fs);
  std::vector<std::size_t> left;
  for (auto e : strikes_all)
    if (e >= events.front()) left.push_back(e);
  std::vector<std::size_t> right;
  for (auto e : rec.events_right)
    if (e >= events.front()) right.push_back(e);
  out.detected_strikes = left.size();
  require(left.size() >= 2, ErrorKind::NoEvents, "fewer than two left foot-strikes detected");

  out.pendulum_length = pendulum_length(com, rec.markers, left);
  const auto xml = xcom(com_f.ml, finite_difference(com_f.ml, 1.0 / rate), out.pendulum_length);
  const auto xap = xcom(com_f.ap, finite_difference(com_f.ap, 1.0 / rate), out.pendulum_length);
  const double threshold = cfg.stance_force_fraction * rec.body_mass * kGravity;
  out.left = detail::side_mos(xml, xap, rec.cop_left, left, threshold, cfg.cop_window);
  out.right = detail::side_mos(xml, xap, rec.cop_right, right, threshold, cfg.cop_window);
  for (auto [name, side] : {std::pair{"left", &out.left}, {"right", &out.right}})
    if (side->ml.skipped > 0)
      out.warnings.push_back(std::to_string(side->ml.skipped) + " " + name +
                             " cycle(s) without stance skipped");

  out.ankle = analyze_ankle(rec, events, cfg);
  return out;
}

}  // namespace ankle
