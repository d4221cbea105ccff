// Experiment execution: presets mapping one-to-one onto the claims the
// library verifies, with manifested CSV/JSON output and derived plot data.
//
// Output is byte-deterministic for a fixed (config, seed): realizations are
// keyed by derived seeds and reduced in index order, so the worker count
// never changes a single byte.
#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "ethlab/runner/config.hpp"

namespace ethlab::runner {

struct ScalarResult {
  std::string name;
  std::string param;  // e.g. "N=64" or "beta=1"; empty when not applicable
  double value = 0.0;
  double standard_error = 0.0;  // 0 marks an exact (non-sampled) quantity
};

struct ResultTable {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

struct ResultRecord {
  std::string experiment_id;
  nlohmann::json config;  // canonical parameter echo
  std::vector<ScalarResult> scalars;
  std::vector<ResultTable> tables;
  double wall_time_seconds = 0.0;  // reported on stdout, never serialized

  const ResultTable* find_table(const std::string& name) const;
  const ScalarResult* find_scalar(const std::string& name,
                                  const std::string& param = "") const;
};

struct RunOptions {
  int workers = 1;
};

/// Runs one experiment and writes results.csv, results.json, manifest.json
/// into config.output_dir.
ResultRecord run(const ExperimentConfig& config, const RunOptions& options = {});

/// Runs `base` once per axis value in a per-value subdirectory. Realization
/// seeds depend on (master seed, axis index, realization index); a
/// single-value sweep reproduces `run` byte for byte.
std::vector<ResultRecord> sweep(const ExperimentConfig& base, const std::string& axis,
                                const std::vector<double>& values,
                                const RunOptions& options = {});

/// Writes whitespace-delimited .dat series derived from the record.
void emit_plot_data(const ResultRecord& record, const std::string& dir);

/// Reloads a record from <results_dir>/results.json.
ResultRecord load_record(const std::string& results_dir);

/// Observable presets (see ObservableConfig); exposed for tests.
HermitianOperator build_observable(const ObservableConfig& obs,
                                   const CompositeSystem& cs, RngSeed preset_seed);

/// Seeded subsystem pair used by every experiment: real-symmetric Gaussian
/// Hamiltonians of dimension n and m derived from the axis master seed.
CompositeSystem build_experiment_composite(const ExperimentConfig& config,
                                           RngSeed axis_master);

/// Fixed-format double used by all text output (17 significant digits).
std::string format_double(double value);

}  // namespace ethlab::runner
