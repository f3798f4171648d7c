// Acceptance run: one PASS/FAIL line per criterion, with the measured
// numbers. Exit status is non-zero if any criterion fails.

#include <chrono>
#include <cstdio>
#include <functional>
#include <string>
#include <unistd.h>

#include "ankle/commands.hpp"
#include "oracles.hpp"

using namespace ankle;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::span<const std::size_t> analysed_events(const TrialRecording& rec) {
  return std::span<const std::size_t>(rec.events_left).subspan(rec.excluded_strides);
}

TrialSpec admittance_spec(ControlMode mode, double k_d) {
  TrialSpec s;
  s.controller.mode = mode;
  s.controller.admittance.K_d = k_d;
  s.plant.ground_stiffness = 63.0;
  return s;
}

// ---------------------------------------------------------------------------

Outcome stiffness_emulation() {
  const double targets[] = {10.0, 15.0, 20.0};
  StiffnessProfile prof[3];
  double at60[3], worst_time = 0.0;
  bool reach = true;
  for (int i = 0; i < 3; ++i) {
    const auto t0 = Clock::now();
    const auto rec = generate_trial(admittance_spec(ControlMode::AC, targets[i]));
    prof[i] = analyze_ankle(rec, analysed_events(rec), {}).stiffness;
    worst_time = std::max(worst_time, seconds_since(t0));
    at60[i] = stiffness_at(prof[i], 60.0);
    reach = reach && std::abs(at60[i] - targets[i]) <= 0.1 * targets[i];
  }
  // Strictly ordered at every unmasked sample of the 20-85 % stance window.
  std::size_t checked = 0, violations = 0;
  for (std::size_t j = 0; j < prof[0].stance_percent.size(); ++j) {
    if (prof[0].masked[j] || prof[1].masked[j] || prof[2].masked[j]) continue;
    ++checked;
    if (!(prof[0].stiffness[j] < prof[1].stiffness[j] && prof[1].stiffness[j] < prof[2].stiffness[j]))
      ++violations;
  }
  const bool pass = reach && checked > 0 && violations == 0 && worst_time < 10.0;
  return {pass, fmt("K(60%%) = %.2f / %.2f / %.2f Nm/deg; ordered at %zu/%zu window samples; slowest %.1f s",
                    at60[0], at60[1], at60[2], checked - violations, checked, worst_time)};
}

Outcome tc_contrast() {
  auto terminal = [](ControlMode mode, double k_d) {
    const auto rec = generate_trial(admittance_spec(mode, k_d));
    return analyze_ankle(rec, analysed_events(rec), {}).stiffness;
  };
  const auto tc = terminal(ControlMode::TC, 10.0);
  const auto ac = terminal(ControlMode::AC, 20.0);
  const double k_tc = terminal_stiffness(tc), k_ac = terminal_stiffness(ac);
  // Near-constant: spread over the window small against AC-20.
  double lo = INFINITY, hi = -INFINITY;
  for (std::size_t j = 0; j < tc.stiffness.size(); ++j)
    if (!tc.masked[j] && tc.stance_percent[j] >= 60.0) {
      lo = std::min(lo, tc.stiffness[j]);
      hi = std::max(hi, tc.stiffness[j]);
    }
  const bool literal = k_ac >= 3.0 * k_tc;
  const bool magnitude = k_ac >= 3.0 * std::abs(k_tc);
  const bool flat = hi - lo < 0.25 * k_ac;
  return {literal && magnitude && flat,
          fmt("terminal AC-20 %.2f vs TC %.2f Nm/deg (ratio on magnitude %.2f); TC late-stance range %.2f",
              k_ac, k_tc, k_ac / std::abs(k_tc), hi - lo)};
}

Outcome rosenstein() {
  const auto t0 = Clock::now();
  const auto pts = oracle::henon_points(200);
  const auto r = rosenstein_divergence(Attractor(pts, 2, 10.0), 10.0, 5, 5);
  const auto ref = oracle::divergence_oracle(pts, 2, 50, 5);
  double err = ref.size() == r.curve.size() ? 0.0 : INFINITY;
  for (std::size_t k = 0; k < std::min(ref.size(), r.curve.size()); ++k)
    err = std::max(err, std::abs(ref[k] - r.curve[k]));

  TrialSpec spec;
  spec.n_strides = 176;
  spec.period_jitter = spec.amplitude_jitter = spec.sway_noise = spec.marker_noise = 0.0;
  spec.step_width_jitter = 0.0;
  const auto rec = generate_trial(spec);
  const auto vel = com_velocity(estimate_com(rec.markers, rec.rate), 2, 10.0);
  LyapunovConfig lc;
  lc.n_windows = 1;
  double worst_S = 0.0, worst_L = 0.0;
  for (const auto& v : vel) {
    const auto w = windowed_lyapunov(v, analysed_events(rec), {10, 4}, lc);
    worst_S = std::max(worst_S, std::abs(w.mean_S));
    worst_L = std::max(worst_L, std::abs(w.mean_L));
  }
  const double t = seconds_since(t0);
  return {err <= 1e-12 && worst_S < 0.05 && worst_L < 0.01 && t < 5.0,
          fmt("toy attractor max |diff| %.1e; periodic |lambda_S| <= %.2e, |lambda_L| <= %.2e; %.1f s", err,
              worst_S, worst_L, t)};
}

Outcome embedding_ranges() {
  const AnalysisConfig cfg;
  std::size_t ok = 0, total = 0;
  std::size_t tau_min = 1000, tau_max = 0, d_min = 1000, d_max = 0;
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    TrialSpec spec;
    spec.seed = seed;
    spec.n_strides = 175;  // 150 analysed strides: one window
    const auto rec = generate_trial(spec);
    const auto vel = com_velocity(estimate_com(rec.markers, rec.rate), cfg.com_filter_order, cfg.com_cutoff);
    bool inside = true;
    for (const auto& v : vel) {
      const auto e = select_embedding(v, analysed_events(rec), cfg, cfg.lyapunov);
      tau_min = std::min(tau_min, e.tau);
      tau_max = std::max(tau_max, e.tau);
      d_min = std::min(d_min, e.dim);
      d_max = std::max(d_max, e.dim);
      inside = inside && e.tau >= 5 && e.tau <= 12 && e.dim >= 2 && e.dim <= 5;
    }
    ok += inside;
    ++total;
  }
  return {10 * ok >= 9 * total, fmt("%zu/%zu trials with every axis in range; tau %zu..%zu, d %zu..%zu", ok,
                                    total, tau_min, tau_max, d_min, d_max)};
}

Outcome mos_equivalence() {
  TrialSpec spec;
  spec.n_strides = 40;
  const auto rec = generate_trial(spec);
  const auto com = estimate_com(rec.markers, rec.rate);
  const auto vel = com_velocity(com, 4, 5.0);
  std::vector<std::size_t> strikes(rec.events_left.begin(), rec.events_left.end());
  const double l = pendulum_length(com, rec.markers, strikes);
  std::size_t cycles = 0, mismatches = 0;
  for (const auto* side : {&rec.cop_left, &rec.cop_right}) {
    const auto& events = side == &rec.cop_left ? rec.events_left : rec.events_right;
    std::vector<double> cml, cap;
    std::vector<char> st;
    auto stance = std::make_unique<bool[]>(side->size());
    for (std::size_t i = 0; i < side->size(); ++i) {
      cml.push_back((*side)[i].ml);
      cap.push_back((*side)[i].ap);
      st.push_back((*side)[i].fz > 0.05 * rec.body_mass * kGravity);
      stance[i] = st.back() != 0;
    }
    const std::span<const bool> mask(stance.get(), side->size());
    const auto xml = xcom(butterworth_lowpass(com.ml, 4, 5.0), vel[0], l).samples();
    const auto xap = xcom(butterworth_lowpass(com.ap, 4, 5.0), vel[1], l).samples();
    const auto ml = mos_ml(xml, cml, mask, events);
    const auto ap = mos_ap(xap, cap, mask, events);
    for (std::size_t k = 0; k + 1 < events.size(); ++k) {
      ++cycles;
      const double ml_ref = oracle::margin_oracle(xml, cml, st, events[k], events[k + 1], true);
      const double ap_ref = oracle::margin_oracle(xap, cap, st, events[k], events[k + 1], false);
      if (ml[k].valid ? ml[k].value != ml_ref : std::isfinite(ml_ref)) ++mismatches;
      if (ap[k].valid ? ap[k].value != ap_ref : std::isfinite(ap_ref)) ++mismatches;
    }
  }
  const auto still = xcom(com.ml, com.ml.with_samples(std::vector<double>(com.ml.size(), 0.0)), l);
  const bool static_equal = still.samples() == com.ml.samples();
  const double w0 = pendulum_frequency(0.97);
  return {mismatches == 0 && static_equal && std::abs(w0 - 3.180) <= 0.001,
          fmt("%zu cycles, %zu mismatches against exhaustive scan; XcoM(v=0) == CoM: %s; omega0(0.97) = %.4f",
              cycles, mismatches, static_equal ? "yes" : "no", w0)};
}

Outcome windowing() {
  TrialSpec spec;  // 200 strides, 25 excluded: 175 analysed
  const auto rec = generate_trial(spec);
  const auto vel = com_velocity(estimate_com(rec.markers, rec.rate), 2, 10.0);
  const auto events = analysed_events(rec);
  const auto w = windowed_lyapunov(vel[2], events, {9, 4});
  // Window 24 spans strides 24..173; normalising it alone gives the same
  // point count.
  const auto [last, grid] = time_normalize(vel[2], events.subspan(24, 151), 150, 15000);
  return {events.size() - 1 == 175 && w.lambda_S.size() == 25 && w.points_per_window == 15000 &&
              last.size() == 15000 && grid.points_per_stride == 100,
          fmt("%zu analysed strides -> %zu windows of %zu points (%zu per stride)", events.size() - 1,
              w.lambda_S.size(), w.points_per_window, grid.points_per_stride)};
}

Outcome ground_compliance() {
  double peak[2] = {0.0, 0.0}, ratio_err = 0.0;
  const double ks[] = {63.0, 25.0}, loads[] = {630.0, 500.0}, targets[] = {10.0, 20.0};
  for (int i = 0; i < 2; ++i) {
    TrialSpec spec;
    spec.n_strides = 10;
    spec.plant.ground_stiffness = ks[i];
    spec.peak_vertical_force = loads[i];
    const auto rec = generate_trial(spec);
    for (const auto* side : {&rec.cop_left, &rec.cop_right})
      for (const auto& c : *side) {
        peak[i] = std::max(peak[i], c.deflection);
        if (c.fz > 0.0) ratio_err = std::max(ratio_err, std::abs(c.deflection * ks[i] / c.fz - 1.0));
      }
  }
  const bool pass = std::abs(peak[0] - targets[0]) <= 0.05 * targets[0] &&
                    std::abs(peak[1] - targets[1]) <= 0.05 * targets[1] && ratio_err < 1e-12;
  return {pass, fmt("peak deflection %.2f mm at 63 kN/m, %.2f mm at 25 kN/m; max |d*k/F - 1| = %.1e", peak[0],
                    peak[1], ratio_err)};
}

Outcome rank_sum() {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> value(0, 6);
  double exact_err = 0.0;
  std::size_t cases = 0;
  for (std::size_t na = 1; na <= 8; ++na)
    for (std::size_t nb = 1; nb <= 8; ++nb) {
      std::vector<double> a(na), b(nb);
      for (auto& v : a) v = value(rng);
      for (auto& v : b) v = value(rng) + 1;
      exact_err = std::max(exact_err, std::abs(wilcoxon_ranksum(a, b).p_value - oracle::exhaustive_p(a, b)));
      ++cases;
    }
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> a(100), b(100);
  for (auto& v : a) v = g(rng);
  for (auto& v : b) v = g(rng) + 0.25;
  const double p = wilcoxon_ranksum(a, b).p_value;
  const double perm = oracle::shuffled_p(a, b, 100000);
  return {exact_err <= 1e-12 && std::abs(p - perm) < 0.005,
          fmt("%zu small cases, max |p - exhaustive| = %.1e; n = 100: p = %.4f vs permutation %.4f", cases,
              exact_err, p, perm)};
}

Outcome determinism() {
  const auto root = fs::temp_directory_path() / ("ankle_acceptance_" + std::to_string(::getpid()));
  auto run = [&](const std::string& name) {
    const auto dir = root / name;
    RunConfig tc, ac;
    tc.trial = admittance_spec(ControlMode::TC, 10.0);
    ac.trial = admittance_spec(ControlMode::AC, 20.0);
    tc.trial.seed = ac.trial.seed = 7;
    cmd_analyze(cmd_simulate(tc, dir / "trials" / "tc"), tc, dir / "reports" / "tc");
    cmd_analyze(cmd_simulate(ac, dir / "trials" / "ac20"), ac, dir / "reports" / "ac20");
    cmd_compare(dir / "reports" / "tc" / "report.json", {dir / "reports" / "ac20" / "report.json"}, 0.01,
                dir / "reports");
    return dir / "reports";
  };
  const auto a = run("first"), b = run("second");
  std::size_t same = 0, files = 0;
  for (const auto& rel : {"tc/report.json", "ac20/report.json", "comparison.json", "comparison.txt",
                          "tc/divergence.csv", "ac20/stiffness.csv"}) {
    ++files;
    same += read_text(a / rel) == read_text(b / rel);
  }
  fs::remove_all(root);
  return {same == files, fmt("%zu/%zu output files byte-identical across two runs", same, files)};
}

Outcome delta_lambda_bookkeeping() {
  auto report = [](double lambda_S) {
    Json lyap, mos;
    for (const char* ax : kAxisKeys)
      lyap[ax] = {{"lambda_S", {{"mean", lambda_S}, {"sd", 0.0}}}, {"lambda_L", {{"mean", 0.0}, {"sd", 0.0}}}};
    for (const char* side : kSideKeys)
      mos[side] = {{"ML", {{"values", {40.0, 41.0}}}}, {"AP", {{"values", {200.0, 201.0}}}}};
    return Json{{"schema", kReportSchema}, {"trial", {{"controller", "TC"}}}, {"lyapunov", lyap}, {"mos", mos}};
  };
  const auto up = compare_reports(report(7.13), {report(8.30)}, {"ac"});
  const auto down = compare_reports(report(5.66), {report(4.82)}, {"ac"});
  const auto& e_up = up["candidates"][0]["lyapunov"]["ML"]["lambda_S"];
  const auto& e_down = down["candidates"][0]["lyapunov"]["ML"]["lambda_S"];
  const double d_up = e_up["delta"].get<double>(), d_down = e_down["delta"].get<double>();
  const bool pass = std::abs(d_up - 1.17) < 1e-12 && !e_up["improved"].get<bool>() &&
                    std::abs(d_down + 0.84) < 1e-12 && e_down["improved"].get<bool>();
  return {pass, fmt("7.13 -> 8.30 gives %+.2f (less stable); 5.66 -> 4.82 gives %+.2f (more stable)", d_up,
                    d_down)};
}

}  // namespace

int main() {
  const std::pair<const char*, std::function<Outcome()>> criteria[] = {
      {"admittance stiffness emulation", stiffness_emulation},
      {"tibia controller baseline contrast", tc_contrast},
      {"Rosenstein correctness", rosenstein},
      {"embedding parameter ranges", embedding_ranges},
      {"margin of stability oracle equivalence", mos_equivalence},
      {"windowing contract", windowing},
      {"ground compliance wiring", ground_compliance},
      {"statistical machinery", rank_sum},
      {"determinism", determinism},
      {"delta-lambda bookkeeping", delta_lambda_bookkeeping},
  };
  int failed = 0, n = 0;
  for (const auto& [name, check] : criteria) {
    ++n;
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s %2d %s: %s\n", o.pass ? "PASS" : "FAIL", n, name, o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
