#pragma once

// Stability reports (JSON), plot-ready CSVs, and controller comparisons.

#include <cmath>
#include <string>
#include <vector>

#include "ankle/analysis.hpp"
#include "ankle/io.hpp"
#include "ankle/stats.hpp"

namespace ankle {

inline constexpr const char* kReportSchema = "ankle-report/1";
inline constexpr const char* kComparisonSchema = "ankle-comparison/1";
inline constexpr const char* kAxisKeys[] = {"ML", "AP", "VT"};
inline constexpr const char* kSideKeys[] = {"left", "right"};

/// Late-stance stiffness: mean over 60-85 % of stance, where the profile
/// has settled.
inline double terminal_stiffness(const StiffnessProfile& p) { return p.mean_between(60.0, 85.0); }

inline double stiffness_at(const StiffnessProfile& p, double percent) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < p.stance_percent.size(); ++i)
    if (std::abs(p.stance_percent[i] - percent) < std::abs(p.stance_percent[best] - percent)) best = i;
  return p.stiffness.empty() ? std::nan("") : p.stiffness[best];
}

namespace detail {

inline Json finite_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

inline Json mean_sd(double mean, double sd, const std::vector<double>& values) {
  Json list = Json::array();
  for (double v : values) list.push_back(finite_or_null(v));
  return {{"mean", finite_or_null(mean)}, {"sd", finite_or_null(sd)}, {"values", list}};
}

}  // namespace detail

/// `trial` carries descriptive metadata (controller, K_d, terrain, seed) and
/// is copied verbatim. Nothing run-specific such as paths or clock time goes
/// in, so equal inputs give byte-equal reports.
inline Json make_report(const TrialAnalysis& a, const Json& trial, const GaitPhaseConfig& gait = {}) {
  Json lyap = Json::object();
  for (const auto& ax : a.axes) {
    const auto& w = ax.lyapunov;
    lyap[std::string(axis_name(ax.axis))] = {
        {"tau", ax.tau},
        {"dim", ax.dim},
        {"tau_fallback", ax.tau_fallback},
        {"dim_saturated", ax.dim_saturated},
        {"lambda_S", detail::mean_sd(w.mean_S, w.sd_S, w.lambda_S)},
        {"lambda_L", detail::mean_sd(w.mean_L, w.sd_L, w.lambda_L)},
    };
  }
  Json mos = Json::object();
  for (auto [name, side] : {std::pair{"left", &a.left}, {"right", &a.right}})
    mos[name] = {{"cycles", side->cycles},
                 {"skipped", side->ml.skipped},
                 {"ML", detail::mean_sd(side->ml.mean, side->ml.sd, side->ml.values)},
                 {"AP", detail::mean_sd(side->ap.mean, side->ap.sd, side->ap.values)}};
  const auto& st = a.ankle.stiffness;
  return {
      {"schema", kReportSchema},
      {"trial", trial},
      {"excluded_strides", a.excluded_strides},
      {"analyzed_strides", a.analyzed_strides},
      {"windows", a.n_windows},
      {"warnings", a.warnings},
      {"lyapunov", lyap},
      {"mos", mos},
      {"pendulum_length", a.pendulum_length},
      {"detected_strikes", a.detected_strikes},
      {"stiffness",
       {{"cycles", a.ankle.average.n_cycles},
        {"window_mean", detail::finite_or_null(st.mean_between(100.0 * gait.window_start, 100.0 * gait.window_end))},
        {"at_60", detail::finite_or_null(stiffness_at(st, 60.0))},
        {"terminal", detail::finite_or_null(terminal_stiffness(st))}}},
  };
}

/// Divergence curves, ankle phase portrait, average moment-angle loop and
/// the stiffness profile, one CSV each.
inline void write_plots(const TrialAnalysis& a, const fs::path& dir, const LyapunovConfig& lc = {}) {
  const auto& c0 = a.axes[0].lyapunov.mean_curve;
  CsvWriter div({"stride", "ML", "AP", "VT"});
  const double sps = static_cast<double>(lc.points) / static_cast<double>(lc.window_strides);
  for (std::size_t k = 0; k < c0.size(); ++k) {
    const auto at = [&](std::size_t ax) {
      const auto& c = a.axes[ax].lyapunov.mean_curve;
      return k < c.size() ? c[k] : std::nan("");
    };
    div.row({static_cast<double>(k) / sps, at(0), at(1), at(2)});
  }
  write_text(dir / "divergence.csv", div.text());

  CsvWriter phase({"q_deg", "q_dot_deg_s"});
  for (std::size_t i = 0; i < a.ankle.angle.size(); ++i) phase.row({a.ankle.angle[i], a.ankle.velocity[i]});
  write_text(dir / "phase_portrait.csv", phase.text());

  const auto& avg = a.ankle.average;
  CsvWriter loop({"gait_percent", "q_deg", "M_Nm"});
  const double last = static_cast<double>(std::max<std::size_t>(1, avg.mean_angle.size() - 1));
  for (std::size_t i = 0; i < avg.mean_angle.size(); ++i)
    loop.row({100.0 * static_cast<double>(i) / last, avg.mean_angle[i], avg.mean_moment[i]});
  write_text(dir / "moment_angle.csv", loop.text());

  const auto& st = a.ankle.stiffness;
  CsvWriter prof({"stance_percent", "stiffness_Nm_per_deg"});
  for (std::size_t i = 0; i < st.stance_percent.size(); ++i)
    prof.raw_row(format_number(st.stance_percent[i]) + "," + (st.masked[i] ? "" : format_number(st.stiffness[i])));
  write_text(dir / "stiffness.csv", prof.text());
}

// ---------------------------------------------------------------------------
// Comparison against a baseline controller
// ---------------------------------------------------------------------------

namespace detail {

inline const Json& report_at(const Json& r, std::initializer_list<const char*> path, const std::string& who) {
  const Json* node = &r;
  std::string so_far;
  for (const char* key : path) {
    so_far += (so_far.empty() ? "" : ".") + std::string(key);
    if (!node->is_object() || !node->contains(key))
      throw Error(ErrorKind::Schema, who + ": missing " + so_far);
    node = &(*node)[key];
  }
  return *node;
}

inline double report_number(const Json& r, std::initializer_list<const char*> path, const std::string& who) {
  const auto& v = report_at(r, path, who);
  if (v.is_null()) return std::nan("");
  if (!v.is_number()) throw Error(ErrorKind::Schema, who + ": expected a number");
  return v.get<double>();
}

inline std::vector<double> report_values(const Json& r, std::initializer_list<const char*> path,
                                         const std::string& who) {
  const auto& v = report_at(r, path, who);
  if (!v.is_array()) throw Error(ErrorKind::Schema, who + ": expected an array of values");
  std::vector<double> out;
  for (const auto& x : v) {
    if (!x.is_number()) throw Error(ErrorKind::Schema, who + ": non-numeric MOS value");
    out.push_back(x.get<double>());
  }
  return out;
}

inline void check_report(const Json& r, const std::string& who) {
  const auto& schema = report_at(r, {"schema"}, who);
  if (!schema.is_string() || schema.get<std::string>() != kReportSchema)
    throw Error(ErrorKind::Schema, who + ": not a stability report");
  for (const char* ax : kAxisKeys)
    for (const char* l : {"lambda_S", "lambda_L"}) {
      report_number(r, {"lyapunov", ax, l, "mean"}, who);
      report_number(r, {"lyapunov", ax, l, "sd"}, who);
    }
  for (const char* side : kSideKeys)
    for (const char* ax : {"ML", "AP"}) report_values(r, {"mos", side, ax, "values"}, who);
}

}  // namespace detail

/// Short label from the report's trial metadata, e.g. "AC 20" or "TC".
inline std::string report_label(const Json& r) {
  if (!r.contains("trial") || !r["trial"].is_object()) return "?";
  const auto& t = r["trial"];
  std::string label = t.value("controller", std::string("?"));
  if (label == "AC" && t.contains("K_d") && t["K_d"].is_number()) {
    char buf[32];
    std::snprintf(buf, sizeof buf, " %g", t["K_d"].get<double>());
    label += buf;
  }
  return label;
}

/// Delta-lambda per axis (candidate minus baseline; negative is more stable)
/// and rank-sum tests on the per-cycle margins (larger is more stable).
inline Json compare_reports(const Json& baseline, const std::vector<Json>& candidates,
                            const std::vector<std::string>& names, double alpha = 0.01) {
  require(!candidates.empty(), ErrorKind::InvalidParameter, "nothing to compare against the baseline");
  require(candidates.size() == names.size(), ErrorKind::InvalidParameter, "one name per candidate");
  detail::check_report(baseline, "baseline");
  Json out = {{"schema", kComparisonSchema}, {"alpha", alpha}, {"baseline", report_label(baseline)}};
  Json list = Json::array();
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    const auto& r = candidates[c];
    const auto& who = names[c];
    detail::check_report(r, who);
    Json entry = {{"name", who}, {"label", report_label(r)}};
    for (const char* ax : kAxisKeys)
      for (const char* l : {"lambda_S", "lambda_L"}) {
        const double b = detail::report_number(baseline, {"lyapunov", ax, l, "mean"}, "baseline");
        const double v = detail::report_number(r, {"lyapunov", ax, l, "mean"}, who);
        const double d = delta_lambda(v, b);
        entry["lyapunov"][ax][l] = {
            {"baseline", {{"mean", detail::finite_or_null(b)},
                          {"sd", detail::finite_or_null(detail::report_number(baseline, {"lyapunov", ax, l, "sd"}, "baseline"))}}},
            {"candidate", {{"mean", detail::finite_or_null(v)},
                           {"sd", detail::finite_or_null(detail::report_number(r, {"lyapunov", ax, l, "sd"}, who))}}},
            {"delta", detail::finite_or_null(d)},
            {"improved", d < 0.0},
        };
      }
    for (const char* side : kSideKeys)
      for (const char* ax : {"ML", "AP"}) {
        const auto bv = detail::report_values(baseline, {"mos", side, ax, "values"}, "baseline");
        const auto cv = detail::report_values(r, {"mos", side, ax, "values"}, who);
        Json e = {{"baseline", {{"mean", detail::finite_or_null(mean(bv))}, {"sd", detail::finite_or_null(stddev(bv))}}},
                  {"candidate", {{"mean", detail::finite_or_null(mean(cv))}, {"sd", detail::finite_or_null(stddev(cv))}}}};
        if (bv.empty() || cv.empty()) {
          e["p_value"] = nullptr;
          e["significant"] = false;
          e["improved"] = false;
        } else {
          const auto t = wilcoxon_ranksum(cv, bv, alpha);
          e["p_value"] = t.p_value;
          e["exact"] = t.exact;
          e["significant"] = t.significant;
          e["improved"] = mean(cv) > mean(bv);
        }
        entry["mos"][side][ax] = e;
      }
    list.push_back(entry);
  }
  out["candidates"] = list;
  return out;
}

/// Plain-text tables: mean +- sd per controller, improvements wrapped in
/// **..**, significant margin differences marked with *.
inline std::string comparison_table(const Json& cmp) {
  std::string s;
  char buf[160];
  const auto& cands = cmp.at("candidates");
  auto cell = [&](const Json& ms) {
    if (ms.at("mean").is_null()) return std::string("n/a");
    char b[64];
    std::snprintf(b, sizeof b, "%.2f +- %.2f", ms.at("mean").get<double>(),
                  ms.at("sd").is_null() ? 0.0 : ms.at("sd").get<double>());
    return std::string(b);
  };
  auto header = [&](const char* title) {
    s += title;
    s += '\n';
    std::snprintf(buf, sizeof buf, "%-14s %-18s", "", cmp.at("baseline").get<std::string>().c_str());
    s += buf;
    for (const auto& c : cands) {
      std::snprintf(buf, sizeof buf, " %-28s", c.at("label").get<std::string>().c_str());
      s += buf;
    }
    s += '\n';
  };

  header("Lyapunov exponents (per stride; delta in brackets)");
  for (const char* l : {"lambda_S", "lambda_L"})
    for (const char* ax : kAxisKeys) {
      std::snprintf(buf, sizeof buf, "%-14s %-18s", (std::string(l) + " " + ax).c_str(),
                    cell(cands.front().at("lyapunov").at(ax).at(l).at("baseline")).c_str());
      s += buf;
      for (const auto& c : cands) {
        const auto& e = c.at("lyapunov").at(ax).at(l);
        std::string v = cell(e.at("candidate"));
        if (e.at("improved").get<bool>()) v = "**" + v + "**";
        char d[32] = "";
        if (!e.at("delta").is_null()) std::snprintf(d, sizeof d, " (%+.2f)", e.at("delta").get<double>());
        std::snprintf(buf, sizeof buf, " %-28s", (v + d).c_str());
        s += buf;
      }
      s += '\n';
    }
  s += '\n';
  header("Margins of stability (mm)");
  for (const char* ax : {"ML", "AP"})
    for (const char* side : kSideKeys) {
      std::snprintf(buf, sizeof buf, "%-14s %-18s", (std::string("MOS_") + ax + " " + side).c_str(),
                    cell(cands.front().at("mos").at(side).at(ax).at("baseline")).c_str());
      s += buf;
      for (const auto& c : cands) {
        const auto& e = c.at("mos").at(side).at(ax);
        std::string v = cell(e.at("candidate"));
        if (e.at("improved").get<bool>()) v = "**" + v + "**";
        if (e.at("significant").get<bool>()) v += "*";
        std::snprintf(buf, sizeof buf, " %-28s", v.c_str());
        s += buf;
      }
      s += '\n';
    }
  std::snprintf(buf, sizeof buf, "\n* rank-sum p < %g\n", cmp.at("alpha").get<double>());
  s += buf;
  return s;
}

}  // namespace ankle
