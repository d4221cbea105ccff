// Command-line runner. Exit codes: 0 success, 2 config error,
// 3 numeric failure, 4 I/O error.
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ethlab/runner/experiments.hpp"
#include "ethlab/version.hpp"

namespace {

using namespace ethlab;
using namespace ethlab::runner;

void apply_overrides(ExperimentConfig& cfg, const std::optional<std::uint64_t>& seed,
                     const std::optional<std::string>& out) {
  if (seed) cfg.seed = *seed;
  if (out) cfg.output_dir = *out;
}

void print_summary(const ResultRecord& rec, const std::string& dir) {
  std::printf("experiment %s -> %s (%.2f s)\n", rec.experiment_id.c_str(),
              dir.c_str(), rec.wall_time_seconds);
  for (const ScalarResult& s : rec.scalars) {
    if (s.param.empty()) {
      std::printf("  %-28s %s", s.name.c_str(), format_double(s.value).c_str());
    } else {
      std::printf("  %-28s %s", (s.name + "[" + s.param + "]").c_str(),
                  format_double(s.value).c_str());
    }
    if (s.standard_error > 0.0) {
      std::printf("  +- %s", format_double(s.standard_error).c_str());
    }
    std::printf("\n");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ethlab: numerical experiments on eigenstate thermalization"};
  app.set_version_flag("--version", std::string(kArtifactVersion));
  app.require_subcommand(1);

  std::string config_path;
  std::string axis;
  std::vector<double> values;
  std::string results_dir;
  std::optional<std::uint64_t> seed_override;
  std::optional<std::string> out_override;
  int workers = 1;

  CLI::App* cmd_run = app.add_subcommand("run", "run one experiment config");
  cmd_run->add_option("config", config_path, "config JSON file")->required();
  cmd_run->add_option("--seed", seed_override, "override the master seed");
  cmd_run->add_option("--workers", workers, "worker threads for realizations")
      ->check(CLI::Range(1, 64));
  cmd_run->add_option("--out", out_override, "override the output directory");

  CLI::App* cmd_sweep = app.add_subcommand("sweep", "run a config across axis values");
  cmd_sweep->add_option("config", config_path, "config JSON file")->required();
  cmd_sweep->add_option("--axis", axis, "swept field (n, m, epsilon, realizations)")
      ->required();
  cmd_sweep->add_option("--values", values, "axis values")
      ->required()
      ->delimiter(',');
  cmd_sweep->add_option("--seed", seed_override, "override the master seed");
  cmd_sweep->add_option("--workers", workers, "worker threads for realizations")
      ->check(CLI::Range(1, 64));
  cmd_sweep->add_option("--out", out_override, "override the output directory");

  CLI::App* cmd_plot = app.add_subcommand("plot-data", "emit .dat series from results");
  cmd_plot->add_option("results_dir", results_dir, "directory holding results.json")
      ->required();

  CLI11_PARSE(app, argc, argv);

  try {
    const RunOptions options{workers};
    if (cmd_run->parsed()) {
      ExperimentConfig cfg = load_config(config_path);
      apply_overrides(cfg, seed_override, out_override);
      const ResultRecord rec = run(cfg, options);
      print_summary(rec, cfg.output_dir);
    } else if (cmd_sweep->parsed()) {
      ExperimentConfig cfg = load_config(config_path);
      apply_overrides(cfg, seed_override, out_override);
      const auto records = sweep(cfg, axis, values, options);
      for (std::size_t i = 0; i < records.size(); ++i) {
        print_summary(records[i], cfg.output_dir);
      }
    } else if (cmd_plot->parsed()) {
      const ResultRecord rec = load_record(results_dir);
      emit_plot_data(rec, results_dir);
      std::printf("plot data written to %s\n", results_dir.c_str());
    }
  } catch (const config_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const io_error& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 4;
  } catch (const error& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
