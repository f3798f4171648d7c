#pragma once

// The three CLI operations as plain functions, so tests can drive them
// without a process boundary. Failures are thrown as Error; exit_code()
// turns them into the process status.

#include <future>
#include <string>
#include <vector>

#include "ankle/config.hpp"
#include "ankle/report.hpp"

namespace ankle {

/// 0 success, 1 validation/schema/parse (and any analysis failure), 2 I/O.
inline int exit_code(ErrorKind kind) { return kind == ErrorKind::Io ? 2 : 1; }

/// Simulates one trial and writes its channels plus manifest.json to `out`.
inline fs::path cmd_simulate(const RunConfig& cfg, const fs::path& out) {
  cfg.validate();
  const auto rec = generate_trial(cfg.trial);
  const auto& t = cfg.trial;
  Json extra = {
      {"controller", std::string(mode_name(t.controller.mode))},
      {"seed", t.seed},
      {"config", config_echo(cfg)},
  };
  return write_trial(rec, out, extra);
}

namespace detail {

inline Json trial_metadata(const Json& manifest) {
  Json meta = Json::object();
  if (manifest.contains("controller")) meta["controller"] = manifest["controller"];
  if (manifest.contains("seed")) meta["seed"] = manifest["seed"];
  meta["rate"] = manifest.value("rate", 0.0);
  meta["samples"] = manifest.value("samples", std::size_t{0});
  if (manifest.contains("config") && manifest["config"].is_object()) {
    const auto& c = manifest["config"];
    if (c.contains("controller") && c["controller"].value("mode", std::string()) == "AC" &&
        c["controller"].contains("K_d"))
      meta["K_d"] = c["controller"]["K_d"];
    if (c.contains("plant") && c["plant"].contains("ground_stiffness"))
      meta["ground_stiffness"] = c["plant"]["ground_stiffness"];
    if (c.contains("trial") && c["trial"].contains("n_strides")) meta["n_strides"] = c["trial"]["n_strides"];
  }
  return meta;
}

}  // namespace detail

/// Analyses the trial behind `manifest`; writes report.json and the plot
/// CSVs into `out` and returns the report.
inline Json cmd_analyze(const fs::path& manifest, const RunConfig& cfg, const fs::path& out) {
  cfg.analysis.validate();
  Json meta;
  const auto rec = read_trial(manifest, &meta);
  const auto analysis = analyze_trial(rec, cfg.analysis);
  auto report = make_report(analysis, detail::trial_metadata(meta), cfg.analysis.gait);
  write_text(out / "report.json", report.dump(2) + "\n");
  write_plots(analysis, out, cfg.analysis.lyapunov);
  return report;
}

/// Several trials at once, one worker each; every trial writes only into
/// its own output directory.
inline std::vector<Json> cmd_analyze_many(const std::vector<fs::path>& manifests, const RunConfig& cfg,
                                          const std::vector<fs::path>& outs) {
  require(manifests.size() == outs.size(), ErrorKind::InvalidParameter, "one output directory per trial");
  std::vector<std::future<Json>> jobs;
  for (std::size_t i = 0; i < manifests.size(); ++i)
    jobs.push_back(std::async(std::launch::async, [&, i] { return cmd_analyze(manifests[i], cfg, outs[i]); }));
  std::vector<Json> reports;
  for (auto& j : jobs) reports.push_back(j.get());  // rethrows the first failure in order
  return reports;
}

/// Compares candidate reports to the baseline; writes comparison.json and
/// comparison.txt into `out`.
inline Json cmd_compare(const fs::path& baseline, const std::vector<fs::path>& candidates, double alpha,
                        const fs::path& out) {
  require(!candidates.empty(), ErrorKind::InvalidParameter, "no candidate reports given");
  const Json base = read_json(baseline);
  std::vector<Json> reports;
  std::vector<std::string> names;
  for (const auto& c : candidates) {
    reports.push_back(read_json(c));
    // The parent directory names the trial when files are all "report.json".
    names.push_back(c.filename() == "report.json" && c.has_parent_path() ? c.parent_path().filename().string()
                                                                          : c.stem().string());
  }
  const auto cmp = compare_reports(base, reports, names, alpha);
  write_text(out / "comparison.json", cmp.dump(2) + "\n");
  write_text(out / "comparison.txt", comparison_table(cmp));
  return cmp;
}

}  // namespace ankle
