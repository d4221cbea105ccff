#include "ethlab/runner/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace ethlab::runner {

namespace {

using nlohmann::json;

void require_keys(const json& obj, const std::set<std::string>& allowed,
                  const char* where) {
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.contains(key)) {
      throw config_error(std::string("config: unknown key \"") + key + "\" in " +
                         where);
    }
  }
}

double get_number(const json& obj, const char* key) {
  if (!obj.at(key).is_number()) {
    throw config_error(std::string("config: \"") + key + "\" must be a number");
  }
  return obj.at(key).get<double>();
}

long get_integer(const json& obj, const char* key) {
  if (!obj.at(key).is_number_integer()) {
    throw config_error(std::string("config: \"") + key + "\" must be an integer");
  }
  return obj.at(key).get<long>();
}

}  // namespace

std::string to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::kEnsembleVsMicro: return "ensemble-vs-micro";
    case ExperimentKind::kVarianceScaling: return "variance-scaling";
    case ExperimentKind::kTimeAverage: return "time-average";
    case ExperimentKind::kEthDiagnostics: return "eth-diagnostics";
    case ExperimentKind::kSubsystemGibbs: return "subsystem-gibbs";
  }
  throw config_error("config: unreachable experiment kind");
}

ExperimentKind experiment_from_string(const std::string& name) {
  if (name == "ensemble-vs-micro") return ExperimentKind::kEnsembleVsMicro;
  if (name == "variance-scaling") return ExperimentKind::kVarianceScaling;
  if (name == "time-average") return ExperimentKind::kTimeAverage;
  if (name == "eth-diagnostics") return ExperimentKind::kEthDiagnostics;
  if (name == "subsystem-gibbs") return ExperimentKind::kSubsystemGibbs;
  throw config_error("config: unknown experiment \"" + name + "\"");
}

std::string to_string(PerturbMode mode) {
  return mode == PerturbMode::kHaarRotation ? "haar-rotation" : "explicit-hamiltonian";
}

PerturbMode mode_from_string(const std::string& name) {
  if (name == "haar-rotation") return PerturbMode::kHaarRotation;
  if (name == "explicit-hamiltonian") return PerturbMode::kExplicitHamiltonian;
  throw config_error("config: unknown mode \"" + name + "\"");
}

ExperimentConfig parse_config(const json& doc) {
  if (!doc.is_object()) throw config_error("config: document must be an object");
  require_keys(doc,
               {"experiment", "n", "m", "epsilon", "mode", "realizations", "seed",
                "window", "observable", "time_grid", "bins", "output_dir"},
               "the top level");

  ExperimentConfig cfg;
  for (const char* key : {"experiment", "n", "m", "realizations", "seed",
                          "observable", "output_dir"}) {
    if (!doc.contains(key)) {
      throw config_error(std::string("config: missing required key \"") + key + "\"");
    }
  }
  cfg.experiment = experiment_from_string(doc.at("experiment").get<std::string>());

  const long n = get_integer(doc, "n");
  const long m = get_integer(doc, "m");
  if (n < 1 || m < 1) throw config_error("config: n and m must be >= 1");
  cfg.n = n;
  cfg.m = m;

  if (doc.contains("epsilon")) {
    cfg.epsilon = get_number(doc, "epsilon");
    if (!(cfg.epsilon > 0.0) || !std::isfinite(cfg.epsilon)) {
      throw config_error("config: epsilon must be finite and > 0");
    }
  }
  if (doc.contains("mode")) {
    cfg.mode = mode_from_string(doc.at("mode").get<std::string>());
  }

  cfg.realizations = get_integer(doc, "realizations");
  if (cfg.realizations < 2) throw config_error("config: realizations must be >= 2");

  if (!doc.at("seed").is_number_unsigned() && !doc.at("seed").is_number_integer()) {
    throw config_error("config: \"seed\" must be an unsigned integer");
  }
  const auto seed_signed = doc.at("seed").get<std::int64_t>();
  if (doc.at("seed").is_number_integer() && seed_signed < 0) {
    throw config_error("config: \"seed\" must be non-negative");
  }
  cfg.seed = doc.at("seed").get<std::uint64_t>();

  if (doc.contains("window")) {
    const json& w = doc.at("window");
    require_keys(w, {"center", "width"}, "\"window\"");
    WindowConfig window;
    window.center = get_number(w, "center");
    window.width = get_number(w, "width");
    if (!(window.width > 0.0)) throw config_error("config: window.width must be > 0");
    cfg.window = window;
  }

  {
    const json& obs = doc.at("observable");
    require_keys(obs, {"preset", "file"}, "\"observable\"");
    if (obs.contains("preset") == obs.contains("file")) {
      throw config_error("config: observable needs exactly one of preset/file");
    }
    if (obs.contains("preset")) {
      cfg.observable.preset = obs.at("preset").get<std::string>();
      static const std::set<std::string> kPresets = {"identity", "h0", "site-projector",
                                                     "random-diagonal"};
      if (!kPresets.contains(cfg.observable.preset)) {
        throw config_error("config: unknown observable preset \"" +
                           cfg.observable.preset + "\"");
      }
    } else {
      cfg.observable.file = obs.at("file").get<std::string>();
      if (cfg.observable.file.empty()) {
        throw config_error("config: observable.file must not be empty");
      }
    }
  }

  if (doc.contains("time_grid")) {
    const json& t = doc.at("time_grid");
    require_keys(t, {"t_max", "steps"}, "\"time_grid\"");
    TimeGridConfig grid;
    grid.t_max = get_number(t, "t_max");
    grid.steps = get_integer(t, "steps");
    if (!(grid.t_max > 0.0) || grid.steps < 2) {
      throw config_error("config: time_grid needs t_max > 0 and steps >= 2");
    }
    cfg.time_grid = grid;
  }

  if (doc.contains("bins")) {
    const json& b = doc.at("bins");
    require_keys(b, {"energy", "omega"}, "\"bins\"");
    BinsConfig bins;
    bins.energy = static_cast<int>(get_integer(b, "energy"));
    bins.omega = static_cast<int>(get_integer(b, "omega"));
    if (bins.energy < 1 || bins.omega < 1) {
      throw config_error("config: bin counts must be >= 1");
    }
    cfg.bins = bins;
  }

  cfg.output_dir = doc.at("output_dir").get<std::string>();
  if (cfg.output_dir.empty()) throw config_error("config: output_dir must not be empty");

  // Per-experiment constraints.
  switch (cfg.experiment) {
    case ExperimentKind::kEnsembleVsMicro:
    case ExperimentKind::kSubsystemGibbs:
      if (cfg.mode != PerturbMode::kHaarRotation) {
        throw config_error("config: " + to_string(cfg.experiment) +
                           " requires mode haar-rotation");
      }
      break;
    case ExperimentKind::kVarianceScaling:
      if (cfg.mode != PerturbMode::kHaarRotation) {
        throw config_error("config: variance-scaling requires mode haar-rotation");
      }
      if (cfg.m % 8 != 0) {
        throw config_error(
            "config: variance-scaling halves m three times; m must be divisible by 8");
      }
      if (cfg.observable.preset == "identity") {
        throw config_error(
            "config: identity observable has zero ensemble variance; "
            "variance-scaling needs a non-trivial observable");
      }
      break;
    case ExperimentKind::kTimeAverage:
    case ExperimentKind::kEthDiagnostics:
      if (cfg.mode != PerturbMode::kExplicitHamiltonian) {
        throw config_error("config: " + to_string(cfg.experiment) +
                           " requires mode explicit-hamiltonian");
      }
      break;
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open config file: " + path);
  json doc;
  try {
    in >> doc;
  } catch (const json::parse_error& e) {
    throw config_error(std::string("config: JSON parse error: ") + e.what());
  }
  return parse_config(doc);
}

json serialize_config(const ExperimentConfig& config) {
  json doc = config_echo(config);
  doc["output_dir"] = config.output_dir;
  return doc;
}

json config_echo(const ExperimentConfig& config) {
  json doc;
  doc["experiment"] = to_string(config.experiment);
  doc["n"] = config.n;
  doc["m"] = config.m;
  doc["epsilon"] = config.epsilon;
  doc["mode"] = to_string(config.mode);
  doc["realizations"] = config.realizations;
  doc["seed"] = config.seed;
  if (config.window) {
    doc["window"] = {{"center", config.window->center}, {"width", config.window->width}};
  }
  if (!config.observable.preset.empty()) {
    doc["observable"] = {{"preset", config.observable.preset}};
  } else {
    doc["observable"] = {{"file", config.observable.file}};
  }
  if (config.time_grid) {
    doc["time_grid"] = {{"t_max", config.time_grid->t_max},
                        {"steps", config.time_grid->steps}};
  }
  if (config.bins) {
    doc["bins"] = {{"energy", config.bins->energy}, {"omega", config.bins->omega}};
  }
  return doc;
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex << hash;
  return os.str();
}

std::string config_hash(const ExperimentConfig& config) {
  return fnv1a_hex(config_echo(config).dump());
}

}  // namespace ethlab::runner
