// Command-line front end: generate synthetic benchmark data, run
// experiments (optionally sweeping alpha / temperature), and aggregate run
// directories into a report.
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hcrpl/experiment.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Self-training domain adaptation with hard-class rectification"};
  app.require_subcommand(1);

  std::string gen_config, gen_out;
  CLI::App* generate = app.add_subcommand(
      "generate", "Write source.csv, target.csv, manifest.json from a config");
  generate->add_option("config", gen_config, "experiment config (json)")
      ->required();
  generate->add_option("--out", gen_out, "output directory (default: config out_dir)");

  std::string run_config;
  hcrpl::RunOverrides overrides;
  std::string preset, run_out;
  std::uint64_t seed = 0;
  CLI::App* run = app.add_subcommand("run", "Execute an experiment config");
  run->add_option("config", run_config, "experiment config (json)")->required();
  CLI::Option* preset_opt =
      run->add_option("--preset", preset, "cbst | hcrpl | paper");
  CLI::Option* seed_opt = run->add_option("--seed", seed, "override run seed");
  CLI::Option* out_opt = run->add_option("--out", run_out, "override out_dir");

  std::vector<std::string> report_dirs;
  std::string report_out = ".";
  CLI::App* report = app.add_subcommand(
      "report", "Aggregate run directories into report.csv + summary.json");
  report->add_option("dirs", report_dirs, "run directories")->required();
  report->add_option("--out", report_out, "output directory for the aggregate");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  if (*generate) return hcrpl::cmd_generate(gen_config, gen_out);
  if (*run) {
    if (*preset_opt) overrides.preset = preset;
    if (*seed_opt) overrides.seed = seed;
    if (*out_opt) overrides.out_dir = run_out;
    return hcrpl::cmd_run(run_config, overrides);
  }
  if (*report) return hcrpl::cmd_report(report_dirs, report_out);
  return 2;
}
