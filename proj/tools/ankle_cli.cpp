// ankle_cli: simulate trials, analyse them, compare controllers.
//
//   ankle_cli simulate --config run.json --seed 3 --out trials/ac20
//   ankle_cli analyze trials/ac20/manifest.json --out results/ac20
//   ankle_cli compare --baseline results/tc/report.json results/ac*/report.json --out results

#include <iostream>

#include "CLI11.hpp"

#include "ankle/commands.hpp"

namespace {

ankle::RunConfig load(const std::string& path) {
  return path.empty() ? ankle::RunConfig{} : ankle::load_config(path);
}

ankle::fs::path pick_out(const std::string& flag, const ankle::RunConfig& cfg) {
  if (!flag.empty()) return flag;
  if (cfg.out) return *cfg.out;
  throw ankle::Error(ankle::ErrorKind::InvalidParameter, "no output directory: pass --out or set paths.out");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Powered ankle prosthesis simulation and gait stability analysis"};
  app.require_subcommand(1);

  std::string config, out, baseline;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> inputs;

  auto* sim = app.add_subcommand("simulate", "Simulate a trial and write its channel CSVs and manifest");
  sim->add_option("--config", config, "Run configuration (JSON)");
  sim->add_option("--seed", seed, "Overrides trial.seed");
  sim->add_option("--out", out, "Output directory");

  auto* ana = app.add_subcommand("analyze", "Analyse one or more simulated or recorded trials");
  ana->add_option("manifests", inputs, "Trial manifest.json files")->required();
  ana->add_option("--config", config, "Run configuration (JSON); only the analysis section is used");
  ana->add_option("--out", out, "Output directory (one subdirectory per trial when several are given)");

  auto* cmp = app.add_subcommand("compare", "Compare candidate reports against a baseline report");
  cmp->add_option("reports", inputs, "Candidate report.json files")->required();
  cmp->add_option("--baseline", baseline, "Baseline report, usually the tibia controller");
  cmp->add_option("--config", config, "Run configuration (JSON); compare.alpha is used");
  cmp->add_option("--out", out, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    auto cfg = load(config);
    if (*sim) {
      if (seed) cfg.trial.seed = *seed;
      const auto manifest = ankle::cmd_simulate(cfg, pick_out(out, cfg));
      std::cout << manifest.string() << "\n";
    } else if (*ana) {
      const auto dir = pick_out(out, cfg);
      if (inputs.size() == 1) {
        ankle::cmd_analyze(inputs.front(), cfg, dir);
        std::cout << (dir / "report.json").string() << "\n";
      } else {
        std::vector<ankle::fs::path> manifests, outs;
        for (const auto& m : inputs) {
          manifests.emplace_back(m);
          const ankle::fs::path p(m);
          outs.push_back(dir / (p.has_parent_path() ? p.parent_path().filename() : p.stem()));
        }
        ankle::cmd_analyze_many(manifests, cfg, outs);
        for (const auto& o : outs) std::cout << (o / "report.json").string() << "\n";
      }
    } else if (*cmp) {
      const ankle::fs::path base = !baseline.empty() ? ankle::fs::path(baseline)
                                   : cfg.baseline ? *cfg.baseline
                                                  : throw ankle::Error(ankle::ErrorKind::InvalidParameter,
                                                                       "no baseline: pass --baseline or set paths.baseline");
      std::vector<ankle::fs::path> reports(inputs.begin(), inputs.end());
      const auto result = ankle::cmd_compare(base, reports, cfg.alpha, pick_out(out, cfg));
      std::cout << ankle::comparison_table(result);
    }
  } catch (const ankle::Error& e) {
    std::cerr << "ankle_cli: " << e.what() << "\n";
    return ankle::exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "ankle_cli: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
