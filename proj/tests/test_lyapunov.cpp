#include <gtest/gtest.h>

#include <cmath>

#include "ankle/analysis.hpp"
#include "ankle/lyapunov.hpp"
#include "ankle/trial.hpp"
#include "oracles.hpp"

using namespace ankle;
using namespace oracle;

namespace {

struct GaitVelocity {
  TrialRecording rec;
  std::array<TimeSeries, 3> velocity;
  std::vector<std::size_t> events;  // after the excluded strides
};

GaitVelocity gait_velocity(TrialSpec spec) {
  GaitVelocity g{generate_trial(spec), {TimeSeries({0.0}, 1.0), TimeSeries({0.0}, 1.0), TimeSeries({0.0}, 1.0)}, {}};
  g.velocity = com_velocity(estimate_com(g.rec.markers, g.rec.rate), 2, 10.0);
  g.events.assign(g.rec.events_left.begin() + 25, g.rec.events_left.end());
  return g;
}

}  // namespace

TEST(DivergenceSlope, LinearCurveAndClosedInterval) {
  std::vector<double> curve(1000);
  for (std::size_t k = 0; k < curve.size(); ++k) curve[k] = 0.5 + 2.5 * static_cast<double>(k) / 100.0;
  EXPECT_NEAR(divergence_slope(curve, 100.0, 0.0, 1.0), 2.5, 1e-12);
  EXPECT_NEAR(divergence_slope(curve, 100.0, 4.0, 10.0), 2.5, 1e-12);
  // Only the two endpoints 0 and 1 fall in [0, 1] at one sample per stride;
  // a kink after them must not leak in.
  const std::vector<double> kinked{0.0, 1.0, 10.0, 20.0};
  EXPECT_NEAR(divergence_slope(kinked, 1.0, 0.0, 1.0), 1.0, 1e-12);
  EXPECT_THROW(divergence_slope(kinked, 1.0, 3.0, 3.0), Error);
}

TEST(Rosenstein, ToyAttractorMatchesBruteForce) {
  const auto pts = henon_points(200);
  const Attractor att(pts, 2, 10.0);
  const auto r = rosenstein_divergence(att, 10.0, 5, 5);
  const auto oracle = divergence_oracle(pts, 2, 50, 5);
  ASSERT_EQ(r.curve.size(), oracle.size());
  for (std::size_t k = 0; k < oracle.size(); ++k) EXPECT_NEAR(r.curve[k], oracle[k], 1e-12) << k;
  EXPECT_EQ(r.pairs, 151u);
}

TEST(Rosenstein, CurveLengthIsHorizonTimesStride) {
  const Attractor att(henon_points(400), 2, 7.0);
  EXPECT_EQ(rosenstein_divergence(att, 7.0, 10, 3).curve.size(), 70u);
}

TEST(Rosenstein, ChaoticInputDiverges) {
  const Attractor att(henon_points(2000), 2, 5.0);
  const auto r = rosenstein_divergence(att, 5.0, 5, 5);
  EXPECT_GT(r.lambda_S, 0.5);
  EXPECT_GT(r.curve[5], r.curve[0]);
}

TEST(Rosenstein, TooFewPairs) {
  std::vector<double> x(20);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::sin(static_cast<double>(i));
  const Attractor att(x, 1, 1.0);
  try {
    rosenstein_divergence(att, 1.0, 10, 6);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InsufficientData);
  }
  EXPECT_THROW(rosenstein_divergence(att, 1.0, 10, 10), Error);
}

TEST(Rosenstein, NoiselessPeriodicTrialDoesNotDiverge) {
  TrialSpec spec;
  spec.n_strides = 176;
  spec.period_jitter = spec.amplitude_jitter = spec.sway_noise = spec.marker_noise = 0.0;
  spec.step_width_jitter = 0.0;
  const auto g = gait_velocity(spec);
  LyapunovConfig lc;
  lc.n_windows = 1;
  for (const auto& v : g.velocity) {
    const auto w = windowed_lyapunov(v, g.events, {10, 4}, lc);
    EXPECT_LT(std::abs(w.mean_S), 0.05) << axis_name(v.label());
    EXPECT_LT(std::abs(w.mean_L), 0.01) << axis_name(v.label());
  }
}

TEST(Windowed, OneHundredSeventyFiveStridesGiveTwentyFiveWindows) {
  TrialSpec spec;
  const auto g = gait_velocity(spec);
  ASSERT_EQ(g.events.size(), 176u);
  const auto w = windowed_lyapunov(g.velocity[2], g.events, {9, 4});
  EXPECT_EQ(w.lambda_S.size(), 25u);
  EXPECT_EQ(w.lambda_L.size(), 25u);
  EXPECT_EQ(w.points_per_window, 15000u);
  EXPECT_EQ(w.mean_curve.size(), 1000u);
  // Stationary trial: windows overlap heavily and agree closely.
  EXPECT_GT(w.mean_S, 0.0);
  EXPECT_LT(w.sd_S, 0.1 * w.mean_S);
}

TEST(Windowed, SingleWindowEqualsDirectPipeline) {
  TrialSpec spec;
  spec.n_strides = 175;
  const auto g = gait_velocity(spec);
  ASSERT_EQ(g.events.size(), 151u);
  LyapunovConfig lc;
  lc.n_windows = 1;
  const auto w = windowed_lyapunov(g.velocity[0], g.events, {8, 4}, lc);

  const auto [norm, grid] = time_normalize(g.velocity[0], g.events, 150, 15000);
  const auto direct = rosenstein_divergence(delay_embed(norm.view(), {8, 4}, 100.0), 100.0);
  ASSERT_EQ(w.lambda_S.size(), 1u);
  EXPECT_EQ(w.lambda_S[0], direct.lambda_S);
  EXPECT_EQ(w.lambda_L[0], direct.lambda_L);
  EXPECT_EQ(w.mean_curve, direct.curve);
  EXPECT_EQ(w.sd_S, 0.0);
}

TEST(Windowed, InsufficientStrides) {
  TrialSpec spec;
  spec.n_strides = 174;
  const auto g = gait_velocity(spec);
  try {
    windowed_lyapunov(g.velocity[0], g.events, {8, 4}, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InsufficientStrides);
  }
}

TEST(Windowed, TimeRescalingLeavesExponentsUnchanged) {
  TrialSpec spec;
  spec.n_strides = 176;
  const auto g = gait_velocity(spec);
  // Same motion recorded at twice the rate, events mapped onto the new grid.
  const auto fast = resample_linear(g.velocity[1], 2.0 * g.velocity[1].sample_rate());
  std::vector<std::size_t> events;
  for (auto e : g.events) events.push_back(2 * e);
  LyapunovConfig lc;
  lc.n_windows = 1;
  const auto a = windowed_lyapunov(g.velocity[1], g.events, {10, 4}, lc);
  const auto b = windowed_lyapunov(fast, events, {10, 4}, lc);
  EXPECT_NEAR(b.mean_S, a.mean_S, 0.05 * std::abs(a.mean_S));
  EXPECT_NEAR(b.mean_L, a.mean_L, 0.01);
}
