// Experiment configuration: strict JSON schema with unknown-key rejection.
#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <json.hpp>

#include "ethlab/system_builder.hpp"

namespace ethlab::runner {

enum class ExperimentKind {
  kEnsembleVsMicro,
  kVarianceScaling,
  kTimeAverage,
  kEthDiagnostics,
  kSubsystemGibbs,
};

std::string to_string(ExperimentKind kind);
ExperimentKind experiment_from_string(const std::string& name);

std::string to_string(PerturbMode mode);
PerturbMode mode_from_string(const std::string& name);

struct WindowConfig {
  double center = 0.0;
  double width = 0.0;
  bool operator==(const WindowConfig&) const = default;
};

struct TimeGridConfig {
  double t_max = 0.0;
  long steps = 0;
  bool operator==(const TimeGridConfig&) const = default;
};

struct BinsConfig {
  int energy = 0;
  int omega = 0;
  bool operator==(const BinsConfig&) const = default;
};

/// Observable selection: exactly one of preset / file.
/// Presets: "identity", "h0", "site-projector", "random-diagonal".
struct ObservableConfig {
  std::string preset;
  std::string file;
  bool operator==(const ObservableConfig&) const = default;
};

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::kEnsembleVsMicro;
  Index n = 2;
  Index m = 2;
  double epsilon = 0.05;
  PerturbMode mode = PerturbMode::kHaarRotation;
  long realizations = 100;
  std::uint64_t seed = 1;
  std::optional<WindowConfig> window;
  ObservableConfig observable;
  std::optional<TimeGridConfig> time_grid;
  std::optional<BinsConfig> bins;
  std::string output_dir = "results";

  bool operator==(const ExperimentConfig&) const = default;
};

/// Parses and validates a config document. Unknown keys are errors.
ExperimentConfig parse_config(const nlohmann::json& doc);

/// Reads, parses and validates a config file.
ExperimentConfig load_config(const std::string& path);

/// Full round-trippable serialization (includes output_dir).
nlohmann::json serialize_config(const ExperimentConfig& config);

/// Canonical parameter echo: everything that defines the experiment,
/// excluding the output location. Hashing this gives the config hash.
nlohmann::json config_echo(const ExperimentConfig& config);

/// FNV-1a 64-bit hash, hex encoded, of the canonical echo.
std::string config_hash(const ExperimentConfig& config);

/// FNV-1a 64-bit hash of arbitrary bytes, hex encoded.
std::string fnv1a_hex(const std::string& bytes);

}  // namespace ethlab::runner
