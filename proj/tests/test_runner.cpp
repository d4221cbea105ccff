#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "ethlab/runner/experiments.hpp"

using namespace ethlab;
using namespace ethlab::runner;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

ExperimentConfig tiny_config(const std::string& out) {
  ExperimentConfig cfg;
  cfg.experiment = ExperimentKind::kEnsembleVsMicro;
  cfg.n = 2;
  cfg.m = 4;
  cfg.realizations = 64;
  cfg.seed = 4242;
  cfg.observable.preset = "random-diagonal";
  cfg.output_dir = out;
  return cfg;
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::path("runner_test_tmp") / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("config round trip through serialize/parse") {
  ExperimentConfig cfg = tiny_config("out");
  cfg.window = WindowConfig{0.5, 2.0};
  cfg.bins = BinsConfig{8, 17};
  CHECK(parse_config(serialize_config(cfg)) == cfg);

  ExperimentConfig ta;
  ta.experiment = ExperimentKind::kTimeAverage;
  ta.mode = PerturbMode::kExplicitHamiltonian;
  ta.n = 4;
  ta.m = 8;
  ta.epsilon = 0.1;
  ta.realizations = 2;
  ta.seed = 7;
  ta.observable.preset = "h0";
  ta.time_grid = TimeGridConfig{50.0, 500};
  ta.output_dir = "elsewhere";
  CHECK(parse_config(serialize_config(ta)) == ta);
}

TEST_CASE("config rejects unknown keys and bad values") {
  nlohmann::json doc = serialize_config(tiny_config("out"));
  doc["typo_field"] = 1;
  CHECK_THROWS_AS(parse_config(doc), config_error);

  doc = serialize_config(tiny_config("out"));
  doc["observable"]["typo"] = "x";
  CHECK_THROWS_AS(parse_config(doc), config_error);

  doc = serialize_config(tiny_config("out"));
  doc["n"] = 0;
  CHECK_THROWS_AS(parse_config(doc), config_error);

  doc = serialize_config(tiny_config("out"));
  doc["experiment"] = "not-an-experiment";
  CHECK_THROWS_AS(parse_config(doc), config_error);

  doc = serialize_config(tiny_config("out"));
  doc["observable"] = {{"preset", "identity"}, {"file", "obs.json"}};
  CHECK_THROWS_AS(parse_config(doc), config_error);

  doc = serialize_config(tiny_config("out"));
  doc["mode"] = "explicit-hamiltonian";  // wrong mode for ensemble-vs-micro
  CHECK_THROWS_AS(parse_config(doc), config_error);

  // variance-scaling constraints
  ExperimentConfig vs = tiny_config("out");
  vs.experiment = ExperimentKind::kVarianceScaling;
  vs.m = 12;  // not divisible by 8
  CHECK_THROWS_AS(parse_config(serialize_config(vs)), config_error);
  vs.m = 16;
  vs.observable.preset = "identity";
  CHECK_THROWS_AS(parse_config(serialize_config(vs)), config_error);
}

TEST_CASE("observable presets have the advertised structure") {
  ExperimentConfig cfg = tiny_config("out");
  const CompositeSystem cs =
      build_experiment_composite(cfg, derive_realization_seed({cfg.seed}, 0));

  const HermitianOperator eye =
      build_observable({"identity", ""}, cs, {1});
  CHECK(max_abs(eye.matrix() - ComplexMatrix::Identity(8, 8)) == 0.0);

  const HermitianOperator h0 = build_observable({"h0", ""}, cs, {1});
  CHECK(max_abs(h0.matrix() - cs.h0().matrix()) == 0.0);

  const HermitianOperator proj = build_observable({"site-projector", ""}, cs, {1});
  // Projector squared equals itself.
  CHECK(max_abs(proj.matrix() * proj.matrix() - proj.matrix()) <= 1e-12);
  CHECK(proj.matrix().trace().real() == doctest::Approx(4.0).epsilon(1e-10));

  const HermitianOperator diag = build_observable({"random-diagonal", ""}, cs, {99});
  CHECK(std::abs(diag.matrix().trace().real()) <= 1e-10);
  const HermitianOperator diag_again =
      build_observable({"random-diagonal", ""}, cs, {99});
  CHECK(diag.matrix() == diag_again.matrix());
}

TEST_CASE("run writes deterministic result files independent of workers") {
  const fs::path base = fresh_dir("determinism");
  ExperimentConfig cfg = tiny_config((base / "a").string());
  run(cfg, {1});
  cfg.output_dir = (base / "b").string();
  run(cfg, {3});

  for (const char* name : {"results.csv", "results.json", "manifest.json"}) {
    CHECK(slurp(base / "a" / name) == slurp(base / "b" / name));
  }
  const std::string csv = slurp(base / "a" / "results.csv");
  CHECK(csv.rfind("experiment,metric,param,value,stderr\n", 0) == 0);
  CHECK(csv.find("ensemble_mean") != std::string::npos);
}

TEST_CASE("seed override changes results; same seed reproduces them") {
  const fs::path base = fresh_dir("seeds");
  ExperimentConfig cfg = tiny_config((base / "a").string());
  run(cfg);
  cfg.output_dir = (base / "b").string();
  run(cfg);
  CHECK(slurp(base / "a" / "results.json") == slurp(base / "b" / "results.json"));

  cfg.seed += 1;
  cfg.output_dir = (base / "c").string();
  run(cfg);
  CHECK(slurp(base / "a" / "results.csv") != slurp(base / "c" / "results.csv"));
}

TEST_CASE("a single-value sweep reproduces a plain run byte for byte") {
  const fs::path base = fresh_dir("sweep_single");
  ExperimentConfig cfg = tiny_config((base / "plain").string());
  run(cfg);

  ExperimentConfig swept = tiny_config((base / "swept").string());
  sweep(swept, "m", {4.0});
  for (const char* name : {"results.csv", "results.json", "manifest.json"}) {
    CHECK(slurp(base / "plain" / name) == slurp(base / "swept" / "m=4" / name));
  }
}

TEST_CASE("sweep validates its axis and produces one directory per value") {
  const fs::path base = fresh_dir("sweep_multi");
  ExperimentConfig cfg = tiny_config((base / "s").string());
  const auto records = sweep(cfg, "m", {4.0, 8.0});
  CHECK(records.size() == 2);
  CHECK(fs::exists(base / "s" / "m=4" / "results.json"));
  CHECK(fs::exists(base / "s" / "m=8" / "results.json"));
  // Different axis values use different derived seed streams.
  CHECK(slurp(base / "s" / "m=4" / "results.csv") !=
        slurp(base / "s" / "m=8" / "results.csv"));

  CHECK_THROWS_AS(sweep(cfg, "experiment", {1.0}), config_error);
  CHECK_THROWS_AS(sweep(cfg, "seed", {1.0}), config_error);
  CHECK_THROWS_AS(sweep(cfg, "m", {2.5}), config_error);
  CHECK_THROWS_AS(sweep(cfg, "m", {}), config_error);
}

TEST_CASE("plot data emission and record reloading") {
  const fs::path base = fresh_dir("plot");
  ExperimentConfig cfg = tiny_config((base / "r").string());
  const ResultRecord rec = run(cfg);
  emit_plot_data(rec, (base / "r").string());
  CHECK(fs::exists(base / "r" / "running_mean.dat"));
  const std::string dat = slurp(base / "r" / "running_mean.dat");
  CHECK(dat.rfind("# realizations mean stderr\n", 0) == 0);

  const ResultRecord reloaded = load_record((base / "r").string());
  CHECK(reloaded.experiment_id == rec.experiment_id);
  REQUIRE(reloaded.find_table("running_mean") != nullptr);
  CHECK(reloaded.find_table("running_mean")->rows.size() ==
        rec.find_table("running_mean")->rows.size());
  REQUIRE(reloaded.find_scalar("ensemble_mean") != nullptr);
  CHECK(reloaded.find_scalar("ensemble_mean")->value ==
        rec.find_scalar("ensemble_mean")->value);

  ResultRecord empty;
  empty.experiment_id = "ensemble-vs-micro";
  CHECK_THROWS_AS(emit_plot_data(empty, (base / "none").string()), numeric_error);
}

TEST_CASE("observable file loading round trip and validation") {
  const fs::path base = fresh_dir("obsfile");
  nlohmann::json doc;
  doc["dim"] = 8;
  nlohmann::json entries = nlohmann::json::array();
  for (int i = 0; i < 8; ++i) {
    for (int j = 0; j < 8; ++j) {
      const double re = i == j ? (i % 2 ? 1.0 : -1.0) : 0.0;
      entries.push_back({re, 0.0});
    }
  }
  doc["entries"] = entries;
  const fs::path obs_path = base / "obs.json";
  std::ofstream(obs_path) << doc.dump();

  ExperimentConfig cfg = tiny_config((base / "r").string());
  cfg.observable = {"", obs_path.string()};
  const ResultRecord rec = run(cfg);
  // Alternating +-1 diagonal is traceless: the microcanonical average is 0.
  REQUIRE(rec.find_scalar("microcanonical_average") != nullptr);
  CHECK(std::abs(rec.find_scalar("microcanonical_average")->value) <= 1e-12);

  ExperimentConfig bad = cfg;
  bad.m = 8;  // N = 16 now, observable stays 8x8
  CHECK_THROWS_AS(run(bad), config_error);
  bad = cfg;
  bad.observable.file = (base / "missing.json").string();
  CHECK_THROWS_AS(run(bad), io_error);
}
