#include "ethlab/runner/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <numeric>
#include <sstream>

#include "ethlab/eth_stats.hpp"
#include "ethlab/subsys_thermo.hpp"
#include "ethlab/version.hpp"

namespace ethlab::runner {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Fixed branch indices of the per-run seed tree.
constexpr std::uint64_t kSeedSubsystemS = 1;
constexpr std::uint64_t kSeedSubsystemR = 2;
constexpr std::uint64_t kSeedInteraction = 3;
constexpr std::uint64_t kSeedObservable = 4;
constexpr std::uint64_t kSeedMonteCarlo = 5;
constexpr std::uint64_t kSeedLadderBase = 100;

struct SeedTree {
  RngSeed axis_master;
  RngSeed subsystem_s;
  RngSeed subsystem_r;
  RngSeed interaction;
  RngSeed observable;
  RngSeed monte_carlo;
};

SeedTree make_seed_tree(std::uint64_t master, std::uint64_t axis_index) {
  SeedTree t;
  t.axis_master = derive_realization_seed(RngSeed{master}, axis_index);
  t.subsystem_s = derive_realization_seed(t.axis_master, kSeedSubsystemS);
  t.subsystem_r = derive_realization_seed(t.axis_master, kSeedSubsystemR);
  t.interaction = derive_realization_seed(t.axis_master, kSeedInteraction);
  t.observable = derive_realization_seed(t.axis_master, kSeedObservable);
  t.monte_carlo = derive_realization_seed(t.axis_master, kSeedMonteCarlo);
  return t;
}

HermitianOperator load_observable_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open observable file: " + path);
  json doc;
  try {
    in >> doc;
  } catch (const json::parse_error& e) {
    throw config_error(std::string("observable file: JSON parse error: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("dim") || !doc.contains("entries")) {
    throw config_error("observable file: expected {\"dim\", \"entries\"}");
  }
  const auto dim = doc.at("dim").get<Index>();
  const auto& entries = doc.at("entries");
  if (dim < 1 || !entries.is_array() ||
      entries.size() != static_cast<std::size_t>(dim * dim)) {
    throw config_error("observable file: entries must hold dim*dim [re, im] pairs");
  }
  ComplexMatrix m(dim, dim);
  for (Index i = 0; i < dim; ++i) {
    for (Index j = 0; j < dim; ++j) {
      const auto& cell = entries.at(static_cast<std::size_t>(i * dim + j));
      if (!cell.is_array() || cell.size() != 2) {
        throw config_error("observable file: each entry must be [re, im]");
      }
      m(i, j) = Complex(cell.at(0).get<double>(), cell.at(1).get<double>());
    }
  }
  return HermitianOperator(std::move(m));
}

EnergyWindow full_window(const EigenSystem& basis) {
  return EnergyWindow::spanning(basis.values());
}

double median_of(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  if (n == 0) throw numeric_error("median of empty sample");
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

// Canonical energy over a fixed spectrum, overflow-safe for any beta.
double spectrum_energy(const RealVector& e, double beta) {
  const double shift = beta >= 0.0 ? e.minCoeff() : e.maxCoeff();
  double z = 0.0;
  double acc = 0.0;
  for (Index i = 0; i < e.size(); ++i) {
    const double w = std::exp(-beta * (e[i] - shift));
    z += w;
    acc += e[i] * w;
  }
  return acc / z;
}

double spectrum_average(const RealVector& e, const RealVector& diag, double beta) {
  const double shift = beta >= 0.0 ? e.minCoeff() : e.maxCoeff();
  double z = 0.0;
  double acc = 0.0;
  for (Index i = 0; i < e.size(); ++i) {
    const double w = std::exp(-beta * (e[i] - shift));
    z += w;
    acc += diag[i] * w;
  }
  return acc / z;
}

// Inverse temperature whose canonical energy over spectrum `e` equals
// `target`, found by bracket expansion plus bisection.
double match_beta(const RealVector& e, double target) {
  const double span = std::max(e.maxCoeff() - e.minCoeff(), 1e-300);
  if (!(target > e.minCoeff()) || !(target < e.maxCoeff())) {
    throw numeric_error("match_beta: target outside the open spectral range");
  }
  double lo = -1.0 / span;
  double hi = 1.0 / span;
  int guard = 0;
  while (spectrum_energy(e, lo) <= target) {
    lo *= 2.0;
    if (++guard > 60) throw numeric_error("match_beta: bracket expansion failed (low)");
  }
  guard = 0;
  while (spectrum_energy(e, hi) >= target) {
    hi *= 2.0;
    if (++guard > 60) throw numeric_error("match_beta: bracket expansion failed (high)");
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double energy = spectrum_energy(e, mid);
    if (std::abs(energy - target) <= 1e-9 * span) return mid;
    if (energy > target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

std::vector<double> uniform_grid(double t_max, long steps) {
  std::vector<double> times(static_cast<std::size_t>(steps) + 1);
  const double h = t_max / static_cast<double>(steps);
  for (long k = 0; k <= steps; ++k) {
    times[static_cast<std::size_t>(k)] = static_cast<double>(k) * h;
  }
  times.back() = t_max;
  return times;
}

void append_downsampled_series(ResultRecord& rec, const std::string& name,
                               const std::vector<double>& times,
                               const std::vector<double>& series,
                               std::size_t max_rows) {
  ResultTable table;
  table.name = name;
  table.columns = {"t", "value"};
  const std::size_t stride = std::max<std::size_t>(1, times.size() / max_rows);
  for (std::size_t k = 0; k < times.size(); k += stride) {
    table.rows.push_back({times[k], series[k]});
  }
  if ((times.size() - 1) % stride != 0) {
    table.rows.push_back({times.back(), series.back()});
  }
  rec.tables.push_back(std::move(table));
}

// ---------------------------------------------------------------------
// Individual experiments.
// ---------------------------------------------------------------------

void run_ensemble_vs_micro(const ExperimentConfig& cfg, const SeedTree& seeds,
                           const RunOptions& options, ResultRecord& rec) {
  const CompositeSystem cs = build_experiment_composite(cfg, seeds.axis_master);
  const HermitianOperator a = build_observable(cfg.observable, cs, seeds.observable);
  const Index state_index = cs.total_dim() / 2;

  const std::vector<double> values = ensemble_realization_values(
      a, cs, state_index, cfg.realizations, seeds.monte_carlo, options.workers);
  const EnsembleStats stats = EnsembleStats::from_values(values);

  const EnergyWindow full = full_window(cs.product_basis());
  const double micro = microcanonical_average(a, cs.product_basis(), full);
  const double bound =
      variance_bound(a, cs.product_basis(), full, cs.total_dim());

  rec.scalars.push_back({"ensemble_mean", "", stats.mean, stats.standard_error});
  rec.scalars.push_back(
      {"ensemble_variance", "", stats.variance, stats.variance_standard_error});
  rec.scalars.push_back({"microcanonical_average", "", micro, 0.0});
  rec.scalars.push_back(
      {"abs_deviation", "", std::abs(stats.mean - micro), stats.standard_error});
  rec.scalars.push_back({"variance_bound", "", bound, 0.0});
  rec.scalars.push_back({"state_index", "", static_cast<double>(state_index), 0.0});
  if (cfg.window) {
    const EnergyWindow window{cfg.window->center, cfg.window->width};
    rec.scalars.push_back({"microcanonical_average_window", "",
                           microcanonical_average(a, cs.product_basis(), window),
                           0.0});
  }

  ResultTable running;
  running.name = "running_mean";
  running.columns = {"realizations", "mean", "stderr"};
  const std::size_t checkpoints = 64;
  const std::size_t stride = std::max<std::size_t>(2, values.size() / checkpoints);
  double acc = 0.0;
  double acc_sq = 0.0;
  for (std::size_t k = 0; k < values.size(); ++k) {
    acc += values[k];
    acc_sq += values[k] * values[k];
    const std::size_t count = k + 1;
    if (count >= 2 && (count % stride == 0 || count == values.size())) {
      const double mean = acc / static_cast<double>(count);
      const double var =
          (acc_sq - static_cast<double>(count) * mean * mean) /
          static_cast<double>(count - 1);
      running.rows.push_back({static_cast<double>(count), mean,
                              std::sqrt(std::max(var, 0.0) / static_cast<double>(count))});
    }
  }
  rec.tables.push_back(std::move(running));
}

void run_variance_scaling(const ExperimentConfig& cfg, const SeedTree& seeds,
                          const RunOptions& options, ResultRecord& rec) {
  ResultTable table;
  table.name = "variance_vs_N";
  table.columns = {"N", "variance", "variance_stderr", "bound", "mean", "mean_stderr"};

  std::vector<double> log_n;
  std::vector<double> log_var;
  const Index divisors[] = {8, 4, 2, 1};
  for (std::size_t idx = 0; idx < 4; ++idx) {
    ExperimentConfig step = cfg;
    step.m = cfg.m / divisors[idx];
    const CompositeSystem cs = build_experiment_composite(step, seeds.axis_master);
    const RngSeed obs_seed =
        derive_realization_seed(seeds.axis_master, kSeedLadderBase + 2 * idx);
    const RngSeed mc_seed =
        derive_realization_seed(seeds.axis_master, kSeedLadderBase + 2 * idx + 1);
    const HermitianOperator a = build_observable(cfg.observable, cs, obs_seed);
    const Index state_index = cs.total_dim() / 2;
    const EnsembleStats stats =
        ensemble_average(a, cs, state_index, cfg.realizations, mc_seed, options.workers);
    const double bound = variance_bound(a, cs.product_basis(),
                                        full_window(cs.product_basis()), cs.total_dim());
    const double n_total = static_cast<double>(cs.total_dim());
    table.rows.push_back({n_total, stats.variance, stats.variance_standard_error,
                          bound, stats.mean, stats.standard_error});
    std::ostringstream param;
    param << "N=" << cs.total_dim();
    rec.scalars.push_back(
        {"variance", param.str(), stats.variance, stats.variance_standard_error});
    rec.scalars.push_back({"variance_bound", param.str(), bound, 0.0});
    if (stats.variance > 0.0) {
      log_n.push_back(std::log(n_total));
      log_var.push_back(std::log(stats.variance));
    }
  }
  if (log_n.size() >= 2) {
    const double k = static_cast<double>(log_n.size());
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < log_n.size(); ++i) {
      sx += log_n[i];
      sy += log_var[i];
      sxx += log_n[i] * log_n[i];
      sxy += log_n[i] * log_var[i];
    }
    const double denom = k * sxx - sx * sx;
    const double slope = (k * sxy - sx * sy) / denom;
    const double intercept = (sy - slope * sx) / k;
    double ss_res = 0.0;
    for (std::size_t i = 0; i < log_n.size(); ++i) {
      const double r = log_var[i] - slope * log_n[i] - intercept;
      ss_res += r * r;
    }
    const double slope_se =
        k > 2 ? std::sqrt(ss_res / (k - 2.0) * k / denom) : 0.0;
    rec.scalars.push_back({"loglog_slope", "", slope, slope_se});
  } else {
    throw numeric_error("variance-scaling: too few positive variances for the fit");
  }
  rec.tables.push_back(std::move(table));
}

void run_time_average(const ExperimentConfig& cfg, const SeedTree& seeds,
                      ResultRecord& rec) {
  const CompositeSystem cs = build_experiment_composite(cfg, seeds.axis_master);
  const Index dim = cs.total_dim();
  HermitianOperator h_int = sample_gaussian_perturbation(
      {dim, cfg.epsilon, SymmetryClass::kRealSymmetric}, seeds.interaction);
  if (cfg.window) {
    h_int = band_limit_perturbation(cs, h_int, cfg.window->width);
  }
  const PerturbedSystem ps = perturb_explicit(cs, h_int);
  const HermitianOperator a = build_observable(cfg.observable, cs, seeds.observable);

  // Quench initial state: the product eigenstate nearest the mean energy.
  const EigenSystem sorted = cs.sorted_product_basis();
  const double mean_energy = sorted.values().mean();
  Index j0 = 0;
  for (Index j = 1; j < dim; ++j) {
    if (std::abs(sorted.values()[j] - mean_energy) <
        std::abs(sorted.values()[j0] - mean_energy)) {
      j0 = j;
    }
  }
  ComplexVector coeff = ps.p.matrix().col(j0).conjugate();
  const InitialState initial = InitialState::normalized(std::move(coeff));

  const double diag_ens = diagonal_ensemble_average(initial, ps.eigensystem, a);

  const RealVector& e = ps.eigensystem.values();
  double min_gap = std::numeric_limits<double>::infinity();
  for (Index i = 0; i + 1 < dim; ++i) {
    min_gap = std::min(min_gap, e[i + 1] - e[i]);
  }
  const double degen_tol = 1e-10 * std::max(e.cwiseAbs().maxCoeff(), 1e-300);
  if (!(min_gap > degen_tol)) {
    throw numeric_error("time-average: spectrum is degenerate; no finite dephasing time");
  }
  const double span = e.maxCoeff() - e.minCoeff();

  rec.scalars.push_back({"diagonal_ensemble", "", diag_ens, 0.0});
  rec.scalars.push_back({"min_gap", "", min_gap, 0.0});

  auto average_over = [&](double t_max, double h) {
    const long steps = static_cast<long>(std::ceil(t_max / h));
    if (steps > 60'000'000) {
      throw numeric_error("time-average: grid exceeds the step budget; "
                          "spectrum too degenerate or span too large");
    }
    const std::vector<double> times = uniform_grid(t_max, steps);
    const std::vector<double> series =
        expectation_time_series(initial, ps.eigensystem, a, times);
    return std::make_pair(times, series);
  };

  if (cfg.time_grid) {
    const std::vector<double> times =
        uniform_grid(cfg.time_grid->t_max, cfg.time_grid->steps);
    const std::vector<double> series =
        expectation_time_series(initial, ps.eigensystem, a, times);
    const double avg = numeric_time_average(series, times);
    rec.scalars.push_back({"time_average", "", avg, 0.0});
    rec.scalars.push_back({"abs_error", "", std::abs(avg - diag_ens), 0.0});
    rec.scalars.push_back({"t_max", "", cfg.time_grid->t_max, 0.0});
    append_downsampled_series(rec, "time_series", times, series, 2000);
  } else {
    const double t_dephase = 1e4 / min_gap;
    const double h = std::numbers::pi / (2.0 * span);
    auto [times, series] = average_over(t_dephase, h);
    const double avg = numeric_time_average(series, times);
    rec.scalars.push_back({"time_average", "T", avg, 0.0});
    rec.scalars.push_back({"abs_error", "T", std::abs(avg - diag_ens), 0.0});
    rec.scalars.push_back({"t_max", "T", t_dephase, 0.0});

    const double h10 = std::numbers::pi / (1.25 * span);
    auto [times10, series10] = average_over(10.0 * t_dephase, h10);
    const double avg10 = numeric_time_average(series10, times10);
    rec.scalars.push_back({"time_average", "10T", avg10, 0.0});
    rec.scalars.push_back({"abs_error", "10T", std::abs(avg10 - diag_ens), 0.0});

    append_downsampled_series(rec, "time_series", times, series, 2000);
  }
}

void run_eth_diagnostics(const ExperimentConfig& cfg, const SeedTree& seeds,
                         ResultRecord& rec) {
  const CompositeSystem cs = build_experiment_composite(cfg, seeds.axis_master);
  const Index dim = cs.total_dim();
  HermitianOperator h_int = sample_gaussian_perturbation(
      {dim, cfg.epsilon, SymmetryClass::kRealSymmetric}, seeds.interaction);
  if (cfg.window) {
    h_int = band_limit_perturbation(cs, h_int, cfg.window->width);
  }
  const PerturbedSystem ps = perturb_explicit(cs, h_int);
  const HermitianOperator a = build_observable(cfg.observable, cs, seeds.observable);

  const int energy_bins = cfg.bins ? cfg.bins->energy : 0;
  const int omega_bins = cfg.bins ? cfg.bins->omega : 0;
  const ETHDiagnostics diag =
      eth_ansatz_diagnostics(a, ps.eigensystem, energy_bins, omega_bins);

  rec.scalars.push_back({"residual_mean", "", diag.residual_mean, 0.0});
  rec.scalars.push_back({"residual_variance", "", diag.residual_variance, 0.0});

  ResultTable diag_table{"eth_diagonal",
                         {"E", "mean", "variance", "count"},
                         {}};
  for (const BinStat& b : diag.diagonal_bins) {
    diag_table.rows.push_back(
        {b.center, b.mean, b.variance, static_cast<double>(b.count)});
  }
  ResultTable entropy_table{"eth_entropy", {"E", "entropy", "count"}, {}};
  for (const BinStat& b : diag.entropy_curve) {
    entropy_table.rows.push_back({b.center, b.mean, static_cast<double>(b.count)});
  }
  ResultTable off_table{"eth_offdiag",
                        {"E", "omega", "mean_sq", "count"},
                        {}};
  for (const OffDiagBinStat& b : diag.offdiag_bins) {
    off_table.rows.push_back(
        {b.energy_center, b.omega_center, b.mean_sq, static_cast<double>(b.count)});
  }

  // Mid-spectrum consistency checks: matrix-element ratio and the
  // energy-matched canonical comparison of the diagonal profile.
  const RealVector& e = ps.eigensystem.values();
  const ComplexMatrix& v = ps.eigensystem.vector_matrix();
  const RealVector diag_elements =
      (v.adjoint() * a.matrix() * v).diagonal().real();

  const double span = diag.e_max - diag.e_min;
  const double mid_lo = diag.e_min + span / 3.0;
  const double mid_hi = diag.e_max - span / 3.0;
  const int central_omega = diag.omega_bin_count / 2;

  ResultTable ratio_table{"eth_ratio",
                          {"E", "diag_variance_half", "offdiag_mean_sq", "ratio"},
                          {}};
  ResultTable eq_table{"canonical_match",
                       {"E", "binned_mean", "canonical_average", "beta", "count"},
                       {}};
  double worst_ratio = 0.0;
  double worst_rel_dev = 0.0;
  long mid_bins_used = 0;
  for (int b = 0; b < diag.energy_bin_count; ++b) {
    const BinStat& stat = diag.diagonal_bins[static_cast<std::size_t>(b)];
    if (stat.center < mid_lo || stat.center > mid_hi || stat.count < 8) continue;

    const OffDiagBinStat& off =
        diag.offdiag_bins[static_cast<std::size_t>(b) * diag.omega_bin_count +
                          static_cast<std::size_t>(central_omega)];
    if (off.count >= 8 && off.mean_sq > 0.0 && stat.variance > 0.0) {
      const double ratio = 0.5 * stat.variance / off.mean_sq;
      ratio_table.rows.push_back({stat.center, 0.5 * stat.variance, off.mean_sq, ratio});
      worst_ratio = std::max(worst_ratio, std::max(ratio, 1.0 / ratio));
    }

    const double beta = match_beta(e, stat.center);
    const double canonical = spectrum_average(e, diag_elements, beta);
    eq_table.rows.push_back(
        {stat.center, stat.mean, canonical, beta, static_cast<double>(stat.count)});
    if (canonical != 0.0) {
      worst_rel_dev =
          std::max(worst_rel_dev, std::abs(stat.mean - canonical) / std::abs(canonical));
    }
    ++mid_bins_used;
  }
  rec.scalars.push_back({"eth_ratio_worst", "", worst_ratio, 0.0});
  rec.scalars.push_back({"canonical_max_rel_dev", "", worst_rel_dev, 0.0});
  rec.scalars.push_back({"mid_bins_used", "", static_cast<double>(mid_bins_used), 0.0});

  rec.tables.push_back(std::move(diag_table));
  rec.tables.push_back(std::move(off_table));
  rec.tables.push_back(std::move(entropy_table));
  rec.tables.push_back(std::move(ratio_table));
  rec.tables.push_back(std::move(eq_table));
}

void run_subsystem_gibbs(const ExperimentConfig& cfg, const SeedTree& seeds,
                         ResultRecord& rec) {
  const CompositeSystem cs = build_experiment_composite(cfg, seeds.axis_master);
  const Index dim = cs.total_dim();
  const Index state_index = dim / 2;
  const DensityMatrix mixed = DensityMatrix::maximally_mixed(cfg.n);

  ResultTable table{"eigenstate_reductions",
                    {"realization", "trace_distance", "renyi2_entropy"},
                    {}};
  std::vector<double> distances;
  double renyi_acc = 0.0;
  double vn_acc = 0.0;
  for (long r = 0; r < cfg.realizations; ++r) {
    const RngSeed sk =
        derive_realization_seed(seeds.monte_carlo, static_cast<std::uint64_t>(r));
    const PerturbedSystem ps = perturb_haar(cs, sk);
    const StateVector psi(ps.eigensystem.vector_matrix().col(state_index));
    const DensityMatrix rho = partial_trace(psi, cfg.n, cfg.m, Subsystem::kS);
    const double td = trace_distance(rho, mixed);
    const double r2 = renyi2_entropy(rho);
    distances.push_back(td);
    renyi_acc += r2;
    vn_acc += von_neumann_entropy(rho);
    table.rows.push_back({static_cast<double>(r), td, r2});
  }
  const double rd = static_cast<double>(cfg.realizations);
  rec.scalars.push_back({"median_trace_distance", "", median_of(distances), 0.0});
  rec.scalars.push_back(
      {"mean_trace_distance", "",
       std::accumulate(distances.begin(), distances.end(), 0.0) / rd, 0.0});
  rec.scalars.push_back({"mean_renyi2_entropy", "", renyi_acc / rd, 0.0});
  rec.scalars.push_back({"mean_von_neumann_entropy", "", vn_acc / rd, 0.0});

  // Effective-temperature round trips on the subsystem Hamiltonian.
  for (double beta : {0.1, 1.0, 5.0}) {
    const DensityMatrix gibbs = gibbs_state(cs.subsystem_s().hamiltonian, beta);
    const BetaFit fit = fit_beta(gibbs, cs.subsystem_s().hamiltonian, -50.0, 50.0);
    std::ostringstream param;
    param << "beta=" << beta;
    rec.scalars.push_back({"beta_recovered", param.str(), fit.beta, 0.0});
    rec.scalars.push_back({"beta_fit_residual", param.str(), fit.residual, 0.0});
  }
  rec.tables.push_back(std::move(table));
}

// ---------------------------------------------------------------------
// Output files.
// ---------------------------------------------------------------------

void write_text_file(const fs::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot open for writing: " + path.string());
  out << contents;
  if (!out) throw io_error("write failed: " + path.string());
}

json record_json(const ResultRecord& rec, const ExperimentConfig& cfg,
                 const SeedTree& seeds) {
  json doc;
  doc["artifact_version"] = kArtifactVersion;
  doc["experiment"] = rec.experiment_id;
  doc["config"] = rec.config;
  doc["seeds"] = {{"axis_master", seeds.axis_master.value},
                  {"subsystem_s", seeds.subsystem_s.value},
                  {"subsystem_r", seeds.subsystem_r.value},
                  {"interaction", seeds.interaction.value},
                  {"observable", seeds.observable.value},
                  {"monte_carlo", seeds.monte_carlo.value}};
  json scalars = json::array();
  for (const ScalarResult& s : rec.scalars) {
    scalars.push_back({{"name", s.name},
                       {"param", s.param},
                       {"value", s.value},
                       {"stderr", s.standard_error}});
  }
  doc["scalars"] = scalars;
  json tables = json::object();
  for (const ResultTable& t : rec.tables) {
    json rows = json::array();
    for (const auto& row : t.rows) rows.push_back(row);
    tables[t.name] = {{"columns", t.columns}, {"rows", rows}};
  }
  doc["tables"] = tables;
  return doc;
}

std::string record_csv(const ResultRecord& rec) {
  std::ostringstream os;
  os << "experiment,metric,param,value,stderr\n";
  for (const ScalarResult& s : rec.scalars) {
    os << rec.experiment_id << ',' << s.name << ',' << s.param << ','
       << format_double(s.value) << ',' << format_double(s.standard_error) << '\n';
  }
  return os.str();
}

void write_record_files(const ResultRecord& rec, const ExperimentConfig& cfg,
                        const SeedTree& seeds) {
  const fs::path dir(cfg.output_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw io_error("cannot create output directory " + dir.string() + ": " +
                         ec.message());

  const std::string csv = record_csv(rec);
  const std::string results = record_json(rec, cfg, seeds).dump(2) + "\n";
  write_text_file(dir / "results.csv", csv);
  write_text_file(dir / "results.json", results);

  json manifest;
  manifest["artifact_version"] = kArtifactVersion;
  manifest["config_hash"] = config_hash(cfg);
  manifest["master_seed"] = cfg.seed;
  manifest["files"] = {{"results.csv", fnv1a_hex(csv)},
                       {"results.json", fnv1a_hex(results)}};
  write_text_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

ResultRecord run_at_axis(const ExperimentConfig& cfg, std::uint64_t axis_index,
                         const RunOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  const SeedTree seeds = make_seed_tree(cfg.seed, axis_index);

  ResultRecord rec;
  rec.experiment_id = to_string(cfg.experiment);
  rec.config = config_echo(cfg);

  switch (cfg.experiment) {
    case ExperimentKind::kEnsembleVsMicro:
      run_ensemble_vs_micro(cfg, seeds, options, rec);
      break;
    case ExperimentKind::kVarianceScaling:
      run_variance_scaling(cfg, seeds, options, rec);
      break;
    case ExperimentKind::kTimeAverage:
      run_time_average(cfg, seeds, rec);
      break;
    case ExperimentKind::kEthDiagnostics:
      run_eth_diagnostics(cfg, seeds, rec);
      break;
    case ExperimentKind::kSubsystemGibbs:
      run_subsystem_gibbs(cfg, seeds, rec);
      break;
  }

  rec.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  write_record_files(rec, cfg, seeds);
  return rec;
}

}  // namespace

const ResultTable* ResultRecord::find_table(const std::string& name) const {
  for (const ResultTable& t : tables) {
    if (t.name == name) return &t;
  }
  return nullptr;
}

const ScalarResult* ResultRecord::find_scalar(const std::string& name,
                                              const std::string& param) const {
  for (const ScalarResult& s : scalars) {
    if (s.name == name && s.param == param) return &s;
  }
  return nullptr;
}

std::string format_double(double value) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.17g", value);
  return buffer;
}

CompositeSystem build_experiment_composite(const ExperimentConfig& config,
                                           RngSeed axis_master) {
  const RngSeed seed_s = derive_realization_seed(axis_master, kSeedSubsystemS);
  const RngSeed seed_r = derive_realization_seed(axis_master, kSeedSubsystemR);
  HermitianOperator h_s = sample_gaussian_perturbation(
      {config.n, 1.0, SymmetryClass::kRealSymmetric}, seed_s);
  HermitianOperator h_r = sample_gaussian_perturbation(
      {config.m, 1.0, SymmetryClass::kRealSymmetric}, seed_r);
  return build_composite(SubsystemSpec(config.n, std::move(h_s)),
                         SubsystemSpec(config.m, std::move(h_r)));
}

HermitianOperator build_observable(const ObservableConfig& obs,
                                   const CompositeSystem& cs, RngSeed preset_seed) {
  const Index dim = cs.total_dim();
  if (!obs.file.empty()) {
    HermitianOperator loaded = load_observable_file(obs.file);
    if (loaded.dim() != dim) {
      std::ostringstream os;
      os << "observable file dim " << loaded.dim() << " does not match N = " << dim;
      throw config_error(os.str());
    }
    return loaded;
  }
  if (obs.preset == "identity") {
    return HermitianOperator::identity(dim);
  }
  if (obs.preset == "h0") {
    return cs.h0();
  }
  if (obs.preset == "site-projector") {
    const ComplexVector alpha0 = cs.eigensystem_s().vector_matrix().col(0);
    const ComplexMatrix proj = alpha0 * alpha0.adjoint();
    return HermitianOperator(
        kron(0.5 * (proj + proj.adjoint().eval()), ComplexMatrix::Identity(cs.m(), cs.m())));
  }
  if (obs.preset == "random-diagonal") {
    GaussianStream stream(preset_seed);
    RealVector d(dim);
    for (Index j = 0; j < dim; ++j) d[j] = stream.next();
    d.array() -= d.mean();  // traceless
    const ComplexMatrix& phi = cs.product_basis().vector_matrix();
    ComplexMatrix a = phi * d.asDiagonal() * phi.adjoint();
    return HermitianOperator(0.5 * (a + a.adjoint().eval()));
  }
  throw config_error("unknown observable preset \"" + obs.preset + "\"");
}

ResultRecord run(const ExperimentConfig& config, const RunOptions& options) {
  return run_at_axis(config, 0, options);
}

std::vector<ResultRecord> sweep(const ExperimentConfig& base, const std::string& axis,
                                const std::vector<double>& values,
                                const RunOptions& options) {
  if (values.empty()) throw config_error("sweep: no axis values given");
  const bool integer_axis = axis == "n" || axis == "m" || axis == "realizations";
  if (!integer_axis && axis != "epsilon") {
    throw config_error("sweep: axis \"" + axis +
                       "\" is not sweepable (use n, m, epsilon or realizations)");
  }
  std::vector<ResultRecord> records;
  for (std::size_t idx = 0; idx < values.size(); ++idx) {
    const double value = values[idx];
    ExperimentConfig cfg = base;
    std::ostringstream dir_name;
    dir_name << axis << "=";
    if (integer_axis) {
      if (!(value >= 1.0) || std::floor(value) != value) {
        throw config_error("sweep: axis \"" + axis + "\" needs positive integers");
      }
      const long v = static_cast<long>(value);
      if (axis == "n") cfg.n = v;
      if (axis == "m") cfg.m = v;
      if (axis == "realizations") cfg.realizations = v;
      dir_name << v;
    } else {
      if (!(value > 0.0)) throw config_error("sweep: epsilon values must be > 0");
      cfg.epsilon = value;
      char buffer[32];
      std::snprintf(buffer, sizeof(buffer), "%g", value);
      dir_name << buffer;
    }
    // Re-validate the adjusted config through the parser.
    cfg = parse_config(serialize_config(cfg));
    cfg.output_dir =
        (fs::path(base.output_dir) / dir_name.str()).string();
    records.push_back(run_at_axis(cfg, static_cast<std::uint64_t>(idx), options));
  }
  return records;
}

ResultRecord load_record(const std::string& results_dir) {
  const fs::path path = fs::path(results_dir) / "results.json";
  std::ifstream in(path);
  if (!in) throw io_error("cannot open " + path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::parse_error& e) {
    throw io_error("results.json parse error: " + std::string(e.what()));
  }
  ResultRecord rec;
  rec.experiment_id = doc.at("experiment").get<std::string>();
  rec.config = doc.at("config");
  for (const auto& s : doc.at("scalars")) {
    rec.scalars.push_back({s.at("name").get<std::string>(),
                           s.at("param").get<std::string>(),
                           s.at("value").is_number() ? s.at("value").get<double>()
                                                     : std::nan(""),
                           s.at("stderr").is_number() ? s.at("stderr").get<double>()
                                                      : std::nan("")});
  }
  for (const auto& [name, t] : doc.at("tables").items()) {
    ResultTable table;
    table.name = name;
    table.columns = t.at("columns").get<std::vector<std::string>>();
    for (const auto& row : t.at("rows")) {
      std::vector<double> r;
      for (const auto& cell : row) {
        r.push_back(cell.is_number() ? cell.get<double>() : std::nan(""));
      }
      table.rows.push_back(std::move(r));
    }
    rec.tables.push_back(std::move(table));
  }
  return rec;
}

namespace {

std::string table_dat(const ResultTable& table, const std::vector<int>& cols) {
  std::ostringstream os;
  os << "#";
  for (int c : cols) os << ' ' << table.columns[static_cast<std::size_t>(c)];
  os << '\n';
  for (const auto& row : table.rows) {
    bool first = true;
    for (int c : cols) {
      if (!first) os << ' ';
      os << format_double(row[static_cast<std::size_t>(c)]);
      first = false;
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace

void emit_plot_data(const ResultRecord& record, const std::string& dir) {
  bool wrote = false;
  const fs::path out(dir);
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw io_error("cannot create plot-data directory: " + ec.message());

  auto emit = [&](const std::string& file, const std::string& contents) {
    write_text_file(out / file, contents);
    wrote = true;
  };

  if (const ResultTable* t = record.find_table("running_mean"); t && !t->rows.empty()) {
    emit("running_mean.dat", table_dat(*t, {0, 1, 2}));
  }
  if (const ResultTable* t = record.find_table("variance_vs_N"); t && !t->rows.empty()) {
    emit("variance_vs_N.dat", table_dat(*t, {0, 1, 2}));
    std::ostringstream os;
    os << "# log_N log_variance\n";
    for (const auto& row : t->rows) {
      if (row[1] > 0.0) {
        os << format_double(std::log(row[0])) << ' '
           << format_double(std::log(row[1])) << '\n';
      }
    }
    emit("variance_loglog.dat", os.str());
  }
  if (const ResultTable* t = record.find_table("time_series"); t && !t->rows.empty()) {
    emit("time_series.dat", table_dat(*t, {0, 1}));
  }
  if (const ResultTable* t = record.find_table("eth_diagonal"); t && !t->rows.empty()) {
    std::ostringstream os;
    os << "# E mean_diagonal\n";
    for (const auto& row : t->rows) {
      if (row[3] > 0.0) {
        os << format_double(row[0]) << ' ' << format_double(row[1]) << '\n';
      }
    }
    emit("eth_diagonal.dat", os.str());
  }
  if (const ResultTable* t = record.find_table("eth_offdiag"); t && !t->rows.empty()) {
    // Count-weighted average of |A_ij|^2 over energy bins at each omega.
    std::map<double, std::pair<double, double>> by_omega;
    for (const auto& row : t->rows) {
      auto& [acc, cnt] = by_omega[row[1]];
      acc += row[2] * row[3];
      cnt += row[3];
    }
    std::ostringstream os;
    os << "# omega mean_sq\n";
    for (const auto& [omega, acc] : by_omega) {
      if (acc.second > 0.0) {
        os << format_double(omega) << ' ' << format_double(acc.first / acc.second)
           << '\n';
      }
    }
    emit("eth_offdiag_omega.dat", os.str());
  }
  if (const ResultTable* t = record.find_table("eth_entropy"); t && !t->rows.empty()) {
    std::ostringstream os;
    os << "# E entropy\n";
    for (const auto& row : t->rows) {
      if (row[2] > 0.0) {
        os << format_double(row[0]) << ' ' << format_double(row[1]) << '\n';
      }
    }
    emit("eth_entropy.dat", os.str());
  }
  if (const ResultTable* t = record.find_table("canonical_match"); t && !t->rows.empty()) {
    emit("canonical_match.dat", table_dat(*t, {0, 1, 2}));
  }
  if (const ResultTable* t = record.find_table("eigenstate_reductions");
      t && !t->rows.empty()) {
    emit("trace_distances.dat", table_dat(*t, {0, 1}));
  }
  if (!wrote) {
    throw numeric_error("emit_plot_data: record contains no tabular series");
  }
}

}  // namespace ethlab::runner
