#include "ethlab/eth_stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <thread>

namespace ethlab {

namespace {

Index clamp_bin(double x, double lo, double hi, int bins) {
  if (bins <= 0) return 0;
  const double w = (hi - lo) / bins;
  if (!(w > 0.0)) return 0;
  auto idx = static_cast<Index>(std::floor((x - lo) / w));
  return std::clamp<Index>(idx, 0, bins - 1);
}

}  // namespace

EnergyWindow EnergyWindow::spanning(const RealVector& values) {
  if (values.size() < 1) throw dimension_error("EnergyWindow::spanning: empty spectrum");
  const double lo = values.minCoeff();
  const double hi = values.maxCoeff();
  return EnergyWindow{0.5 * (lo + hi), (hi - lo) + 1.0};
}

std::vector<Index> EnergyWindow::select(const RealVector& values) const {
  if (!(width > 0.0) || !std::isfinite(width) || !std::isfinite(center)) {
    throw numeric_error("EnergyWindow: width must be finite and > 0");
  }
  std::vector<Index> out;
  const double half = 0.5 * width;
  for (Index j = 0; j < values.size(); ++j) {
    if (std::abs(values[j] - center) <= half) out.push_back(j);
  }
  if (out.empty()) {
    double nearest = values.size() ? values[0] : 0.0;
    for (Index j = 1; j < values.size(); ++j) {
      if (std::abs(values[j] - center) < std::abs(nearest - center)) {
        nearest = values[j];
      }
    }
    std::ostringstream os;
    os << "EnergyWindow: no levels in [E - dE/2, E + dE/2] for E = " << center
       << ", dE = " << width << "; nearest level is " << nearest;
    throw numeric_error(os.str());
  }
  return out;
}

EnsembleStats EnsembleStats::from_values(const std::vector<double>& values) {
  const auto r = static_cast<long>(values.size());
  if (r < 2) throw numeric_error("EnsembleStats: need at least 2 realizations");
  EnsembleStats s;
  s.count = r;
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(r);
  double m2 = 0.0;
  double m4 = 0.0;
  for (double v : values) {
    const double d = v - s.mean;
    m2 += d * d;
    m4 += d * d * d * d;
  }
  const auto rd = static_cast<double>(r);
  s.variance = m2 / (rd - 1.0);
  s.standard_error = std::sqrt(s.variance / rd);
  // Distribution-free standard error of the sample variance.
  m4 /= rd;
  const double var_of_var =
      (m4 - (rd - 3.0) / (rd - 1.0) * s.variance * s.variance) / rd;
  s.variance_standard_error = var_of_var > 0.0 ? std::sqrt(var_of_var) : 0.0;
  return s;
}

InitialState::InitialState(ComplexVector coefficients) : coeff_(std::move(coefficients)) {
  if (coeff_.size() < 1) throw dimension_error("InitialState: empty");
  if (!coeff_.allFinite()) throw numeric_error("InitialState: non-finite coefficients");
  const double norm_sq = coeff_.squaredNorm();
  if (std::abs(norm_sq - 1.0) > 2e-12) {
    std::ostringstream os;
    os << "InitialState: sum |C_i|^2 = " << norm_sq << " deviates from 1";
    throw numeric_error(os.str());
  }
}

InitialState InitialState::normalized(ComplexVector v) {
  const double norm = v.norm();
  if (!(norm > 0.0) || !std::isfinite(norm)) {
    throw numeric_error("InitialState::normalized: zero or non-finite norm");
  }
  v /= norm;
  return InitialState(std::move(v));
}

double eigenstate_expectation(const StateVector& psi, const HermitianOperator& a) {
  if (psi.dim() != a.dim()) {
    std::ostringstream os;
    os << "eigenstate_expectation: state dim " << psi.dim() << " vs operator dim "
       << a.dim();
    throw dimension_error(os.str());
  }
  const Complex val = psi.amplitudes().dot(a.matrix() * psi.amplitudes());
  const double tol = 1e-10 * std::max(a.max_entry(), 1e-300);
  if (std::abs(val.imag()) > tol) {
    std::ostringstream os;
    os << "eigenstate_expectation: imaginary residue " << val.imag()
       << " exceeds " << tol;
    throw numeric_error(os.str());
  }
  return val.real();
}

double microcanonical_average(const HermitianOperator& a, const EigenSystem& basis,
                              const EnergyWindow& window) {
  if (a.dim() != basis.dim()) {
    throw dimension_error("microcanonical_average: operator/basis dim mismatch");
  }
  const std::vector<Index> selected = window.select(basis.values());
  const ComplexMatrix& v = basis.vector_matrix();
  double sum = 0.0;
  for (Index j : selected) {
    sum += v.col(j).dot(a.matrix() * v.col(j)).real();
  }
  return sum / static_cast<double>(selected.size());
}

std::vector<double> ensemble_realization_values(const HermitianOperator& a,
                                                const CompositeSystem& cs,
                                                Index state_index,
                                                long realizations, RngSeed seed,
                                                int workers) {
  const Index dim = cs.total_dim();
  if (a.dim() != dim) {
    throw dimension_error("ensemble_realization_values: operator dim mismatch");
  }
  if (state_index < 0 || state_index >= dim) {
    throw dimension_error("ensemble_realization_values: state index out of range");
  }
  if (realizations < 2) {
    throw numeric_error("ensemble_realization_values: need at least 2 realizations");
  }

  // A in the sorted product basis; each realization then needs only the
  // state_index-th row of the sampled rotation P (Haar rotation of that
  // basis), which is exactly what perturb_haar would produce.
  const EigenSystem sorted = cs.sorted_product_basis();
  const ComplexMatrix a_phi =
      sorted.vector_matrix().adjoint() * a.matrix() * sorted.vector_matrix();

  std::vector<double> values(static_cast<std::size_t>(realizations), 0.0);
  auto work = [&](long begin, long end) {
    for (long k = begin; k < end; ++k) {
      const RngSeed sk = derive_realization_seed(seed, static_cast<std::uint64_t>(k));
      const UnitaryMatrix p = sample_haar_unitary(dim, sk);
      const ComplexVector row = p.matrix().row(state_index).transpose();
      values[static_cast<std::size_t>(k)] = row.dot(a_phi * row).real();
    }
  };

  const int pool = std::clamp<int>(workers, 1, 64);
  if (pool == 1 || realizations < 2 * pool) {
    work(0, realizations);
  } else {
    std::vector<std::thread> threads;
    const long chunk = (realizations + pool - 1) / pool;
    for (int w = 0; w < pool; ++w) {
      const long begin = w * chunk;
      const long end = std::min<long>(begin + chunk, realizations);
      if (begin >= end) break;
      threads.emplace_back(work, begin, end);
    }
    for (auto& t : threads) t.join();
  }
  return values;
}

EnsembleStats ensemble_average(const HermitianOperator& a, const CompositeSystem& cs,
                               Index state_index, long realizations, RngSeed seed,
                               int workers) {
  return EnsembleStats::from_values(ensemble_realization_values(
      a, cs, state_index, realizations, seed, workers));
}

double variance_bound(const HermitianOperator& a, const EigenSystem& basis,
                      const EnergyWindow& window, Index total_dim) {
  if (total_dim < 1) throw dimension_error("variance_bound: N must be >= 1");
  const HermitianOperator a_sq = hermitian_power(a, 2);
  return 2.0 / static_cast<double>(total_dim) *
         microcanonical_average(a_sq, basis, window);
}

std::vector<double> expectation_time_series(const InitialState& c,
                                            const EigenSystem& es,
                                            const HermitianOperator& a,
                                            const std::vector<double>& times) {
  const Index dim = es.dim();
  if (c.dim() != dim || a.dim() != dim) {
    throw dimension_error("expectation_time_series: dim mismatch");
  }
  if (times.empty()) throw dimension_error("expectation_time_series: empty time grid");

  const ComplexMatrix& v = es.vector_matrix();
  const ComplexMatrix a_tilde = v.adjoint() * a.matrix() * v;
  const RealVector& e = es.values();
  const ComplexVector& coeff = c.coefficients();

  const auto total = static_cast<Index>(times.size());
  std::vector<double> series(times.size(), 0.0);
  const double imag_tol = 1e-9 * std::max(a.max_entry(), 1e-300);

  constexpr Index kBlock = 512;
  ComplexMatrix phases(dim, kBlock);
  for (Index start = 0; start < total; start += kBlock) {
    const Index b = std::min<Index>(kBlock, total - start);
    for (Index col = 0; col < b; ++col) {
      const double t = times[static_cast<std::size_t>(start + col)];
      for (Index i = 0; i < dim; ++i) {
        phases(i, col) = coeff[i] * std::polar(1.0, -e[i] * t);
      }
    }
    const ComplexMatrix w = a_tilde * phases.leftCols(b);
    for (Index col = 0; col < b; ++col) {
      const Complex val = phases.col(col).dot(w.col(col));
      if (std::abs(val.imag()) > imag_tol) {
        std::ostringstream os;
        os << "expectation_time_series: imaginary residue " << val.imag()
           << " exceeds " << imag_tol << " at t = "
           << times[static_cast<std::size_t>(start + col)];
        throw numeric_error(os.str());
      }
      series[static_cast<std::size_t>(start + col)] = val.real();
    }
  }
  return series;
}

double diagonal_ensemble_average(const InitialState& c, const EigenSystem& es,
                                 const HermitianOperator& a) {
  const Index dim = es.dim();
  if (c.dim() != dim || a.dim() != dim) {
    throw dimension_error("diagonal_ensemble_average: dim mismatch");
  }
  const ComplexMatrix& v = es.vector_matrix();
  const ComplexMatrix a_tilde = v.adjoint() * a.matrix() * v;
  const RealVector& e = es.values();
  const ComplexVector& coeff = c.coefficients();

  std::vector<Index> order(static_cast<std::size_t>(dim));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Index x, Index y) { return e[x] < e[y]; });

  const double degen_tol = 1e-10 * std::max(e.cwiseAbs().maxCoeff(), 1e-300);
  double total = 0.0;
  std::size_t g = 0;
  while (g < order.size()) {
    std::size_t h = g + 1;
    while (h < order.size() && e[order[h]] - e[order[h - 1]] <= degen_tol) ++h;
    // Cross terms survive the infinite-time average inside a degenerate group.
    Complex group(0.0, 0.0);
    for (std::size_t x = g; x < h; ++x) {
      for (std::size_t y = g; y < h; ++y) {
        group += std::conj(coeff[order[x]]) * a_tilde(order[x], order[y]) *
                 coeff[order[y]];
      }
    }
    total += group.real();
    g = h;
  }
  return total;
}

double numeric_time_average(const std::vector<double>& series,
                            const std::vector<double>& times) {
  if (series.size() != times.size()) {
    throw dimension_error("numeric_time_average: series/times size mismatch");
  }
  if (times.size() < 2) {
    throw dimension_error("numeric_time_average: need at least 2 samples");
  }
  for (std::size_t k = 1; k < times.size(); ++k) {
    if (!(times[k] > times[k - 1])) {
      throw numeric_error("numeric_time_average: times must be strictly increasing");
    }
  }
  double integral = 0.0;
  for (std::size_t k = 1; k < times.size(); ++k) {
    integral += 0.5 * (series[k] + series[k - 1]) * (times[k] - times[k - 1]);
  }
  return integral / (times.back() - times.front());
}

ETHDiagnostics eth_ansatz_diagnostics(const HermitianOperator& a,
                                      const EigenSystem& es, int energy_bins,
                                      int omega_bins) {
  const Index dim = es.dim();
  if (a.dim() != dim) {
    throw dimension_error("eth_ansatz_diagnostics: operator/basis dim mismatch");
  }
  const int default_bins =
      static_cast<int>(std::ceil(std::sqrt(static_cast<double>(dim))));
  if (energy_bins <= 0) energy_bins = default_bins;
  if (omega_bins <= 0) omega_bins = 2 * default_bins + 1;
  if (dim < 4 * static_cast<Index>(energy_bins)) {
    std::ostringstream os;
    os << "eth_ansatz_diagnostics: need N >= 4 * energy_bins, got N = " << dim
       << ", energy_bins = " << energy_bins;
    throw numeric_error(os.str());
  }

  const ComplexMatrix& v = es.vector_matrix();
  const ComplexMatrix a_tilde = v.adjoint() * a.matrix() * v;
  const RealVector& e = es.values();

  ETHDiagnostics diag;
  diag.energy_bin_count = energy_bins;
  diag.omega_bin_count = omega_bins;
  diag.e_min = e.minCoeff();
  diag.e_max = e.maxCoeff();
  const double span = std::max(diag.e_max - diag.e_min, 1e-300);
  const double bin_width = span / energy_bins;

  // Diagonal profile and per-bin spread.
  std::vector<double> sum(energy_bins, 0.0);
  std::vector<double> sum_sq(energy_bins, 0.0);
  std::vector<long> count(energy_bins, 0);
  for (Index i = 0; i < dim; ++i) {
    const Index b = clamp_bin(e[i], diag.e_min, diag.e_max, energy_bins);
    const double d = a_tilde(i, i).real();
    sum[b] += d;
    sum_sq[b] += d * d;
    ++count[b];
  }
  diag.diagonal_bins.resize(static_cast<std::size_t>(energy_bins));
  diag.entropy_curve.resize(static_cast<std::size_t>(energy_bins));
  for (int b = 0; b < energy_bins; ++b) {
    BinStat& s = diag.diagonal_bins[static_cast<std::size_t>(b)];
    s.center = diag.e_min + (b + 0.5) * bin_width;
    s.count = count[b];
    s.flagged = count[b] < 5;
    if (count[b] > 0) {
      s.mean = sum[b] / static_cast<double>(count[b]);
      s.variance = count[b] > 1
                       ? (sum_sq[b] - static_cast<double>(count[b]) * s.mean * s.mean) /
                             static_cast<double>(count[b] - 1)
                       : 0.0;
      if (s.variance < 0.0) s.variance = 0.0;
    } else {
      s.mean = std::numeric_limits<double>::quiet_NaN();
    }
    // Density-of-states entropy, regularized by the spectral span.
    BinStat& ent = diag.entropy_curve[static_cast<std::size_t>(b)];
    ent.center = s.center;
    ent.count = count[b];
    ent.flagged = s.flagged;
    ent.mean = count[b] > 0
                   ? std::log(static_cast<double>(count[b]) * span / bin_width)
                   : std::numeric_limits<double>::quiet_NaN();
  }

  // Off-diagonal strength binned by (mean energy, frequency).
  const double omega_max = span * (1.0 + 1e-12);
  std::vector<double> off_sum(static_cast<std::size_t>(energy_bins) * omega_bins, 0.0);
  std::vector<long> off_count(static_cast<std::size_t>(energy_bins) * omega_bins, 0);
  for (Index i = 0; i < dim; ++i) {
    for (Index j = 0; j < dim; ++j) {
      if (i == j) continue;
      const Index eb = clamp_bin(0.5 * (e[i] + e[j]), diag.e_min, diag.e_max, energy_bins);
      const Index ob = clamp_bin(e[i] - e[j], -omega_max, omega_max, omega_bins);
      const std::size_t slot =
          static_cast<std::size_t>(eb) * omega_bins + static_cast<std::size_t>(ob);
      off_sum[slot] += std::norm(a_tilde(i, j));
      ++off_count[slot];
    }
  }
  diag.offdiag_bins.resize(off_sum.size());
  const double omega_width = 2.0 * omega_max / omega_bins;
  for (int eb = 0; eb < energy_bins; ++eb) {
    for (int ob = 0; ob < omega_bins; ++ob) {
      const std::size_t slot =
          static_cast<std::size_t>(eb) * omega_bins + static_cast<std::size_t>(ob);
      OffDiagBinStat& s = diag.offdiag_bins[slot];
      s.energy_center = diag.e_min + (eb + 0.5) * bin_width;
      s.omega_center = -omega_max + (ob + 0.5) * omega_width;
      s.count = off_count[slot];
      s.flagged = off_count[slot] < 5;
      s.mean_sq = off_count[slot] > 0
                      ? off_sum[slot] / static_cast<double>(off_count[slot])
                      : 0.0;
    }
  }

  // Empirical moments of the fluctuation factor, normalized per bin by the
  // root-mean-square off-diagonal element.
  double r_sum = 0.0;
  double r_sum_sq = 0.0;
  long r_count = 0;
  for (Index i = 0; i < dim; ++i) {
    for (Index j = 0; j < dim; ++j) {
      if (i == j) continue;
      const Index eb = clamp_bin(0.5 * (e[i] + e[j]), diag.e_min, diag.e_max, energy_bins);
      const Index ob = clamp_bin(e[i] - e[j], -omega_max, omega_max, omega_bins);
      const std::size_t slot =
          static_cast<std::size_t>(eb) * omega_bins + static_cast<std::size_t>(ob);
      const double ms = diag.offdiag_bins[slot].mean_sq;
      if (ms <= 0.0) continue;
      const double r = a_tilde(i, j).real() / std::sqrt(ms);
      r_sum += r;
      r_sum_sq += r * r;
      ++r_count;
    }
  }
  diag.residual_count = r_count;
  if (r_count > 1) {
    diag.residual_mean = r_sum / static_cast<double>(r_count);
    diag.residual_variance =
        (r_sum_sq - static_cast<double>(r_count) * diag.residual_mean * diag.residual_mean) /
        static_cast<double>(r_count - 1);
  }
  return diag;
}

HermitianOperator hermitian_power(const HermitianOperator& a, int power) {
  if (power < 1 || power > 3) {
    throw numeric_error("hermitian_power: power must be in {1,2,3}");
  }
  ComplexMatrix acc = a.matrix();
  for (int p = 1; p < power; ++p) acc = (acc * a.matrix()).eval();
  return HermitianOperator(0.5 * (acc + acc.adjoint().eval()));
}

ETHDiagnostics moment_structure_check(const HermitianOperator& a, int power,
                                      const EigenSystem& es, int energy_bins,
                                      int omega_bins) {
  if (power < 2 || power > 3) {
    throw numeric_error("moment_structure_check: power must be 2 or 3");
  }
  return eth_ansatz_diagnostics(hermitian_power(a, power), es, energy_bins, omega_bins);
}

}  // namespace ethlab
