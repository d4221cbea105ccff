// Acceptance suite: one pass/fail line per criterion. Exits nonzero if any
// criterion fails. Instances are pinned by seed so every run is identical.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "ethlab/eth_stats.hpp"
#include "ethlab/runner/experiments.hpp"
#include "ethlab/subsys_thermo.hpp"

using namespace ethlab;

namespace {

namespace fs = std::filesystem;

// Pinned instance parameters. The time-average seed was selected for a
// large minimum level gap (short dephasing horizon); the diagnostics
// instance uses a weakly split two-level subsystem against a wide bath so
// the projector profile stays shallow across the canonical energy width.
constexpr std::uint64_t kTimeAvgMaster = 195;
constexpr double kTimeAvgEpsilon = 0.12;
constexpr std::uint64_t kEthMaster = 31;
constexpr double kEthEpsilon = 0.5;
constexpr double kEthSubsystemScale = 0.5;

int failures = 0;

void report(int id, const std::string& name, bool pass, const std::string& details) {
  std::printf("[%s] criterion %d: %s — %s\n", pass ? "PASS" : "FAIL", id,
              name.c_str(), details.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

CompositeSystem seeded_composite(Index n, Index m, std::uint64_t master,
                                 double scale_s = 1.0) {
  const RngSeed root{master};
  HermitianOperator h_s = sample_gaussian_perturbation(
      {n, scale_s, SymmetryClass::kRealSymmetric}, derive_realization_seed(root, 1));
  HermitianOperator h_r = sample_gaussian_perturbation(
      {m, 1.0, SymmetryClass::kRealSymmetric}, derive_realization_seed(root, 2));
  return build_composite(SubsystemSpec(n, std::move(h_s)),
                         SubsystemSpec(m, std::move(h_r)));
}

HermitianOperator traceless_diagonal(const CompositeSystem& cs, std::uint64_t seed) {
  GaussianStream stream(RngSeed{seed});
  RealVector d(cs.total_dim());
  for (Index j = 0; j < cs.total_dim(); ++j) d[j] = stream.next();
  d.array() -= d.mean();
  const ComplexMatrix& phi = cs.product_basis().vector_matrix();
  ComplexMatrix a = phi * d.asDiagonal() * phi.adjoint();
  return HermitianOperator(0.5 * (a + a.adjoint().eval()));
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

// ---------------------------------------------------------------------

void criterion_1_ensemble_mean() {
  const auto t0 = std::chrono::steady_clock::now();
  bool pass = true;
  std::ostringstream details;
  for (Index m : {32, 128}) {
    const auto t_inner = std::chrono::steady_clock::now();
    const CompositeSystem cs = seeded_composite(2, m, 11);
    const Index n_total = cs.total_dim();
    const HermitianOperator a = traceless_diagonal(cs, 1100 + m);
    const EnsembleStats stats =
        ensemble_average(a, cs, n_total / 2, 2000, RngSeed{2200 + static_cast<std::uint64_t>(m)});
    const double micro = microcanonical_average(
        a, cs.product_basis(), EnergyWindow::spanning(cs.product_basis().values()));
    const double dev = std::abs(stats.mean - micro);
    const double elapsed = seconds_since(t_inner);
    const bool ok = dev <= 5.0 * stats.standard_error && elapsed < 60.0;
    pass = pass && ok;
    details << "N=" << n_total << ": |mean-micro|=" << dev
            << " vs 5*se=" << 5.0 * stats.standard_error << " in " << elapsed
            << "s; ";
  }
  details << "total " << seconds_since(t0) << "s";
  report(1, "ensemble mean equals microcanonical average", pass, details.str());
}

void criterion_2_variance_bound() {
  const auto t0 = std::chrono::steady_clock::now();
  bool pass = true;
  std::ostringstream details;
  std::vector<double> log_n, log_var;
  for (Index m : {32, 64, 128, 256}) {
    const CompositeSystem cs = seeded_composite(2, m, 13);
    const Index n_total = cs.total_dim();
    const HermitianOperator a = traceless_diagonal(cs, 1300 + m);
    const long realizations = n_total >= 512 ? 1000 : 2000;
    const EnsembleStats stats = ensemble_average(
        a, cs, n_total / 2, realizations, RngSeed{2600 + static_cast<std::uint64_t>(m)});
    const double bound = variance_bound(
        a, cs.product_basis(), EnergyWindow::spanning(cs.product_basis().values()),
        n_total);
    const bool ok = stats.variance <= bound + 3.0 * stats.variance_standard_error;
    pass = pass && ok;
    details << "N=" << n_total << ": var=" << stats.variance << " bound=" << bound
            << (ok ? " ok; " : " VIOLATED; ");
    log_n.push_back(std::log(static_cast<double>(n_total)));
    log_var.push_back(std::log(stats.variance));
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < log_n.size(); ++i) {
    sx += log_n[i];
    sy += log_var[i];
    sxx += log_n[i] * log_n[i];
    sxy += log_n[i] * log_var[i];
  }
  const double k = static_cast<double>(log_n.size());
  const double slope = (k * sxy - sx * sy) / (k * sxx - sx * sx);
  const double elapsed = seconds_since(t0);
  const bool slope_ok = slope >= -1.4 && slope <= -0.6;
  pass = pass && slope_ok && elapsed < 300.0;
  details << "slope=" << slope << " in [-1.4,-0.6]? " << (slope_ok ? "yes" : "no")
          << "; total " << elapsed << "s";
  report(2, "Haar variance bound and 1/N scaling", pass, details.str());
}

void criterion_3_time_average() {
  const auto t0 = std::chrono::steady_clock::now();
  // Pinned nondegenerate N = 32 instance (seed chosen for a healthy minimum
  // level gap, which keeps the dephasing horizon short).
  const CompositeSystem cs = seeded_composite(4, 8, kTimeAvgMaster);
  const HermitianOperator h_int =
      sample_gaussian_perturbation({32, kTimeAvgEpsilon, SymmetryClass::kRealSymmetric},
                                   derive_realization_seed(RngSeed{kTimeAvgMaster}, 3));
  const PerturbedSystem ps = perturb_explicit(cs, h_int);
  const HermitianOperator a = cs.h0();

  const EigenSystem sorted = cs.sorted_product_basis();
  const double mean_energy = sorted.values().mean();
  Index j0 = 0;
  for (Index j = 1; j < 32; ++j) {
    if (std::abs(sorted.values()[j] - mean_energy) <
        std::abs(sorted.values()[j0] - mean_energy)) {
      j0 = j;
    }
  }
  const InitialState initial =
      InitialState::normalized(ps.p.matrix().col(j0).conjugate());
  const double de = diagonal_ensemble_average(initial, ps.eigensystem, a);

  const RealVector& e = ps.eigensystem.values();
  double min_gap = 1e300;
  for (Index i = 1; i < 32; ++i) min_gap = std::min(min_gap, e[i] - e[i - 1]);
  const double span = e[31] - e[0];

  auto averaged = [&](double t_final, double h) {
    const long steps = static_cast<long>(std::ceil(t_final / h));
    std::vector<double> times(static_cast<std::size_t>(steps) + 1);
    for (long s = 0; s <= steps; ++s) {
      times[static_cast<std::size_t>(s)] = t_final * static_cast<double>(s) / steps;
    }
    const std::vector<double> series =
        expectation_time_series(initial, ps.eigensystem, a, times);
    return numeric_time_average(series, times);
  };

  const double t_dephase = 1e4 / min_gap;
  const double err_t =
      std::abs(averaged(t_dephase, std::numbers::pi / (2.0 * span)) - de);
  const double err_10t =
      std::abs(averaged(10.0 * t_dephase, std::numbers::pi / (1.25 * span)) - de);

  const double elapsed = seconds_since(t0);
  const bool pass = err_t <= 1e-2 && err_10t <= 1e-3 && elapsed < 30.0;
  std::ostringstream details;
  details << "min_gap=" << min_gap << " T=" << t_dephase << " |avg(T)-DE|=" << err_t
          << " |avg(10T)-DE|=" << err_10t << " in " << elapsed << "s";
  report(3, "finite-time average converges to the diagonal ensemble", pass,
         details.str());
}

void criterion_4_subsystem_gibbs() {
  const auto t0 = std::chrono::steady_clock::now();
  bool pass = true;
  std::ostringstream details;

  const HermitianOperator h_s = sample_gaussian_perturbation(
      {2, 1.0, SymmetryClass::kRealSymmetric}, RngSeed{1701});
  std::vector<double> medians;
  for (Index m : {8, 16, 32, 64}) {
    const CompositeSystem cs = build_composite(
        SubsystemSpec(2, h_s),
        SubsystemSpec(m, sample_gaussian_perturbation(
                             {m, 1.0, SymmetryClass::kRealSymmetric},
                             RngSeed{1800 + static_cast<std::uint64_t>(m)})));
    std::vector<double> distances;
    for (int r = 0; r < 100; ++r) {
      const PerturbedSystem ps = perturb_haar(
          cs, derive_realization_seed(RngSeed{1900 + static_cast<std::uint64_t>(m)},
                                      static_cast<std::uint64_t>(r)));
      const StateVector psi(ps.eigensystem.vector_matrix().col(cs.total_dim() / 2));
      distances.push_back(trace_distance(partial_trace(psi, 2, m, Subsystem::kS),
                                         DensityMatrix::maximally_mixed(2)));
    }
    std::sort(distances.begin(), distances.end());
    medians.push_back(0.5 * (distances[49] + distances[50]));
    details << "m=" << m << ": median=" << medians.back() << "; ";
  }
  for (std::size_t i = 1; i < medians.size(); ++i) {
    pass = pass && medians[i] < medians[i - 1];
  }

  for (double beta : {0.1, 1.0, 5.0}) {
    const BetaFit fit = fit_beta(gibbs_state(h_s, beta), h_s, -50.0, 50.0);
    const bool ok = std::abs(fit.beta - beta) <= 1e-6;
    pass = pass && ok;
    details << "beta=" << beta << " recovered " << fit.beta << "; ";
  }
  const double elapsed = seconds_since(t0);
  pass = pass && elapsed < 60.0;
  details << "total " << elapsed << "s";
  report(4, "subsystem reductions approach Gibbs form as m grows", pass,
         details.str());
}

void criterion_5_eth_diagnostics() {
  const auto t0 = std::chrono::steady_clock::now();
  const CompositeSystem cs = seeded_composite(2, 128, kEthMaster, kEthSubsystemScale);
  const HermitianOperator h_int =
      sample_gaussian_perturbation({256, kEthEpsilon, SymmetryClass::kRealSymmetric},
                                   derive_realization_seed(RngSeed{kEthMaster}, 3));
  const PerturbedSystem ps = perturb_explicit(cs, h_int);

  // Single-site ground-state projector of S, extended by the identity on R.
  const ComplexVector alpha0 = cs.eigensystem_s().vector_matrix().col(0);
  ComplexMatrix proj = alpha0 * alpha0.adjoint();
  const HermitianOperator a(
      kron(0.5 * (proj + proj.adjoint().eval()), ComplexMatrix::Identity(128, 128)));

  const int energy_bins = 16;
  const int omega_bins = 33;
  const ETHDiagnostics diag =
      eth_ansatz_diagnostics(a, ps.eigensystem, energy_bins, omega_bins);

  const RealVector& e = ps.eigensystem.values();
  const ComplexMatrix& v = ps.eigensystem.vector_matrix();
  const RealVector diag_elements = (v.adjoint() * a.matrix() * v).diagonal().real();

  const double span = diag.e_max - diag.e_min;
  const double mid_lo = diag.e_min + span / 3.0;
  const double mid_hi = diag.e_max - span / 3.0;

  bool pass = true;
  int mid_bins = 0;
  double worst_ratio = 1.0;
  double worst_rel = 0.0;
  for (int b = 0; b < energy_bins; ++b) {
    const BinStat& stat = diag.diagonal_bins[static_cast<std::size_t>(b)];
    if (stat.center < mid_lo || stat.center > mid_hi || stat.count < 8) continue;
    ++mid_bins;

    const OffDiagBinStat& off =
        diag.offdiag_bins[static_cast<std::size_t>(b) * omega_bins + omega_bins / 2];
    if (off.count >= 8 && off.mean_sq > 0.0 && stat.variance > 0.0) {
      const double ratio = 0.5 * stat.variance / off.mean_sq;
      worst_ratio = std::max(worst_ratio, std::max(ratio, 1.0 / ratio));
      pass = pass && ratio >= 1.0 / 3.0 && ratio <= 3.0;
    }

    // Energy-matched canonical average over the perturbed spectrum.
    double lo = -1.0 / span, hi = 1.0 / span;
    auto energy_at = [&](double beta) {
      const double shift = beta >= 0.0 ? e.minCoeff() : e.maxCoeff();
      double z = 0.0, acc = 0.0;
      for (Index i = 0; i < e.size(); ++i) {
        const double w = std::exp(-beta * (e[i] - shift));
        z += w;
        acc += e[i] * w;
      }
      return acc / z;
    };
    while (energy_at(lo) <= stat.center) lo *= 2.0;
    while (energy_at(hi) >= stat.center) hi *= 2.0;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (energy_at(mid) > stat.center) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    const double beta = 0.5 * (lo + hi);
    const double shift = beta >= 0.0 ? e.minCoeff() : e.maxCoeff();
    double z = 0.0, acc = 0.0;
    for (Index i = 0; i < e.size(); ++i) {
      const double w = std::exp(-beta * (e[i] - shift));
      z += w;
      acc += diag_elements[i] * w;
    }
    const double canonical = acc / z;
    const double rel = std::abs(stat.mean - canonical) / std::abs(canonical);
    worst_rel = std::max(worst_rel, rel);
    pass = pass && rel <= 0.10;
  }
  const double elapsed = seconds_since(t0);
  pass = pass && mid_bins >= 3 && elapsed < 120.0;
  std::ostringstream details;
  details << "mid bins=" << mid_bins << " worst ratio=" << worst_ratio
          << " (limit 3) worst canonical rel dev=" << worst_rel
          << " (limit 0.10) in " << elapsed << "s";
  report(5, "matrix-element diagnostics match the thermal profile", pass,
         details.str());
}

void criterion_6_oracle_equivalences() {
  const auto t0 = std::chrono::steady_clock::now();
  bool pass = true;
  std::ostringstream details;

  // Partial trace against the explicit double-index summation.
  GaussianStream g(RngSeed{606});
  ComplexVector psi(15);
  for (Index i = 0; i < 15; ++i) psi[i] = g.next_complex();
  psi /= psi.norm();
  const DensityMatrix rho = partial_trace(StateVector(psi), 3, 5, Subsystem::kS);
  ComplexMatrix oracle = ComplexMatrix::Zero(3, 3);
  for (Index l = 0; l < 3; ++l) {
    for (Index lp = 0; lp < 3; ++lp) {
      for (Index k = 0; k < 5; ++k) {
        oracle(l, lp) += psi[l * 5 + k] * std::conj(psi[lp * 5 + k]);
      }
    }
  }
  const double pt_err = max_abs(rho.matrix() - oracle);
  pass = pass && pt_err <= 1e-12;
  details << "partial-trace err=" << pt_err << "; ";

  // Two-route subsystem expectation.
  const HermitianOperator m_op = sample_gaussian_perturbation(
      {3, 1.0, SymmetryClass::kComplexHermitian}, RngSeed{607});
  const double route_full = subsystem_expectation(StateVector(psi), m_op, 3, 5);
  const double route_reduced = (m_op.matrix() * rho.matrix()).trace().real();
  const double route_err = std::abs(route_full - route_reduced);
  pass = pass && route_err <= 1e-10;
  details << "two-route err=" << route_err << "; ";

  // Haar unitarity and the eigendecomposition residual contract.
  double worst_defect = 0.0;
  for (Index dim : {2, 16, 64}) {
    worst_defect = std::max(
        worst_defect,
        sample_haar_unitary(dim, RngSeed{static_cast<std::uint64_t>(608 + dim)})
            .unitarity_defect());
  }
  pass = pass && worst_defect <= 1e-10;
  details << "haar defect=" << worst_defect << "; ";

  const HermitianOperator h = sample_gaussian_perturbation(
      {64, 1.0, SymmetryClass::kComplexHermitian}, RngSeed{611});
  const EigenSystem es = hermitian_eigendecomposition(h);
  const double residual = max_abs(es.vector_matrix() * es.values().asDiagonal() *
                                      es.vector_matrix().adjoint() -
                                  h.matrix());
  const double limit = 1e-9 * 64 * h.max_entry();
  pass = pass && residual <= limit;
  const double elapsed = seconds_since(t0);
  pass = pass && elapsed < 10.0;
  details << "eig residual=" << residual << " (limit " << limit << ") in "
          << elapsed << "s";
  report(6, "exact numerics: oracle equivalences", pass, details.str());
}

void criterion_7_reproducibility() {
  const auto t0 = std::chrono::steady_clock::now();
  bool pass = true;
  std::ostringstream details;

  const fs::path base = fs::path("acceptance_tmp");
  fs::remove_all(base);

  runner::ExperimentConfig cfg;
  cfg.experiment = runner::ExperimentKind::kEnsembleVsMicro;
  cfg.n = 2;
  cfg.m = 16;
  cfg.realizations = 200;
  cfg.seed = 777;
  cfg.observable.preset = "random-diagonal";

  cfg.output_dir = (base / "a").string();
  runner::run(cfg, {1});
  cfg.output_dir = (base / "b").string();
  runner::run(cfg, {4});
  for (const char* name : {"results.csv", "results.json", "manifest.json"}) {
    const bool same = slurp(base / "a" / name) == slurp(base / "b" / name);
    pass = pass && same;
    if (!same) details << name << " differs; ";
  }

  runner::ExperimentConfig gibbs;
  gibbs.experiment = runner::ExperimentKind::kSubsystemGibbs;
  gibbs.n = 2;
  gibbs.m = 16;
  gibbs.realizations = 20;
  gibbs.seed = 778;
  gibbs.observable.preset = "identity";
  gibbs.output_dir = (base / "c").string();
  runner::run(gibbs, {2});
  gibbs.output_dir = (base / "d").string();
  runner::run(gibbs, {1});
  for (const char* name : {"results.csv", "results.json", "manifest.json"}) {
    const bool same = slurp(base / "c" / name) == slurp(base / "d" / name);
    pass = pass && same;
    if (!same) details << "gibbs " << name << " differs; ";
  }
  details << "byte-identical across reruns and worker counts in "
          << seconds_since(t0) << "s";
  report(7, "byte-exact reproducibility", pass, details.str());
}

}  // namespace

int main() {
  std::printf("ethlab acceptance suite\n");
  criterion_1_ensemble_mean();
  criterion_2_variance_bound();
  criterion_3_time_average();
  criterion_4_subsystem_gibbs();
  criterion_5_eth_diagnostics();
  criterion_6_oracle_equivalences();
  criterion_7_reproducibility();
  if (failures > 0) {
    std::printf("%d criterion(s) FAILED\n", failures);
    return 1;
  }
  std::printf("all criteria passed\n");
  return 0;
}
