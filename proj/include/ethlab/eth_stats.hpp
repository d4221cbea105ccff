// Eigenstate expectation statistics: microcanonical and ensemble averages,
// the Haar variance bound, time evolution and the diagonal ensemble, and
// binned matrix-element diagnostics.
#pragma once

#include <vector>

#include "ethlab/ensembles.hpp"
#include "ethlab/numkernel.hpp"
#include "ethlab/system_builder.hpp"

namespace ethlab {

/// Closed energy interval [center - width/2, center + width/2].
struct EnergyWindow {
  double center = 0.0;
  double width = 0.0;

  /// Window covering every entry of `values` with margin.
  static EnergyWindow spanning(const RealVector& values);

  /// Indices with |E_j - center| <= width/2. Throws numeric_error naming
  /// (center, width, nearest level) when the selection is empty.
  std::vector<Index> select(const RealVector& values) const;
};

/// Monte Carlo summary over independent realizations.
///
/// standard_error estimates the error of `mean`; variance_standard_error
/// estimates the error of `variance` itself (fourth-moment formula), used
/// when testing variance bounds.
struct EnsembleStats {
  long count = 0;
  double mean = 0.0;
  double variance = 0.0;
  double standard_error = 0.0;
  double variance_standard_error = 0.0;

  static EnsembleStats from_values(const std::vector<double>& values);
};

/// Initial-state coefficients over a perturbed eigenbasis, unit norm.
class InitialState {
 public:
  explicit InitialState(ComplexVector coefficients);
  static InitialState normalized(ComplexVector v);

  Index dim() const { return coeff_.size(); }
  const ComplexVector& coefficients() const { return coeff_; }

 private:
  ComplexVector coeff_;
};

/// One diagnostics bin over energy (or energy for the entropy curve).
struct BinStat {
  double center = 0.0;
  double mean = 0.0;
  double variance = 0.0;  // diagonal bins only; 0 elsewhere
  long count = 0;
  bool flagged = false;  // fewer than 5 samples
};

/// One (energy, omega) bin of squared off-diagonal matrix elements.
struct OffDiagBinStat {
  double energy_center = 0.0;
  double omega_center = 0.0;
  double mean_sq = 0.0;
  long count = 0;
  bool flagged = false;
};

/// Binned estimates of the matrix-element structure of an observable in an
/// eigenbasis: smooth diagonal profile, off-diagonal strength by
/// (mean energy, frequency), density-of-states entropy curve, and empirical
/// moments of the normalized fluctuation factor.
struct ETHDiagnostics {
  int energy_bin_count = 0;
  int omega_bin_count = 0;
  double e_min = 0.0;
  double e_max = 0.0;
  std::vector<BinStat> diagonal_bins;
  std::vector<OffDiagBinStat> offdiag_bins;  // row-major [energy][omega]
  std::vector<BinStat> entropy_curve;
  double residual_mean = 0.0;
  double residual_variance = 0.0;
  long residual_count = 0;
};

/// <psi| A |psi>, guaranteed real within 1e-10 * ||A||_max.
double eigenstate_expectation(const StateVector& psi, const HermitianOperator& a);

/// Uniform average of <phi_j| A |phi_j> over basis states inside the window.
double microcanonical_average(const HermitianOperator& a, const EigenSystem& basis,
                              const EnergyWindow& window);

/// Per-realization eigenstate expectation values <psi_i| A |psi_i> under
/// independent Haar rotations of the sorted product basis, one rotation per
/// derived seed. `workers` threads fill disjoint slots, so the output is
/// independent of the worker count.
std::vector<double> ensemble_realization_values(const HermitianOperator& a,
                                                const CompositeSystem& cs,
                                                Index state_index,
                                                long realizations, RngSeed seed,
                                                int workers = 1);

/// Monte Carlo mean/variance of the values above.
EnsembleStats ensemble_average(const HermitianOperator& a, const CompositeSystem& cs,
                               Index state_index, long realizations, RngSeed seed,
                               int workers = 1);

/// Upper bound (2/N) <A^2>_micro on the ensemble variance.
double variance_bound(const HermitianOperator& a, const EigenSystem& basis,
                      const EnergyWindow& window, Index total_dim);

/// Expectation value series A_t = sum_ij C_i* C_j e^{i(E_i - E_j)t} A_ij
/// (hbar = 1). Throws numeric_error if the imaginary residue ever exceeds
/// 1e-9 * ||A||_max.
std::vector<double> expectation_time_series(const InitialState& c,
                                            const EigenSystem& es,
                                            const HermitianOperator& a,
                                            const std::vector<double>& times);

/// Infinite-time average sum_i |C_i|^2 A_ii, with degenerate groups
/// (within 1e-10 * max|E|) retaining their internal cross terms.
double diagonal_ensemble_average(const InitialState& c, const EigenSystem& es,
                                 const HermitianOperator& a);

/// Trapezoidal mean (1/T) integral of the sampled series over its span.
double numeric_time_average(const std::vector<double>& series,
                            const std::vector<double>& times);

/// Binned matrix-element structure of A in the eigenbasis `es`.
/// Non-positive bin counts select the defaults ceil(sqrt(N)) energy bins
/// and 2*ceil(sqrt(N))+1 omega bins.
ETHDiagnostics eth_ansatz_diagnostics(const HermitianOperator& a,
                                      const EigenSystem& es, int energy_bins,
                                      int omega_bins);

/// Diagnostics of A^power (power in {2,3}), built by repeated multiplication.
ETHDiagnostics moment_structure_check(const HermitianOperator& a, int power,
                                      const EigenSystem& es, int energy_bins,
                                      int omega_bins);

/// A^power as a Hermitian operator (repeated multiplication, symmetrized).
HermitianOperator hermitian_power(const HermitianOperator& a, int power);

}  // namespace ethlab
