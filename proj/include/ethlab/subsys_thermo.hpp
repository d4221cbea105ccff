// Subsystem thermodynamics: partial trace, Gibbs states, canonical
// averages, effective-temperature fitting, and entanglement entropies.
#pragma once

#include "ethlab/eth_stats.hpp"
#include "ethlab/numkernel.hpp"

namespace ethlab {

/// Hermitian, positive semidefinite, unit trace.
///
/// Construction tolerates eigenvalues down to -1e-10 (clipped to zero and
/// the state rescaled to unit trace); the clipped ascending spectrum is
/// kept for entropy evaluation.
class DensityMatrix {
 public:
  explicit DensityMatrix(const HermitianOperator& rho);

  Index dim() const { return mat_.rows(); }
  const ComplexMatrix& matrix() const { return mat_; }
  const RealVector& eigenvalues() const { return eigs_; }

  /// Maximally mixed state I/d.
  static DensityMatrix maximally_mixed(Index dim);

 private:
  ComplexMatrix mat_;
  RealVector eigs_;
};

enum class Subsystem { kS, kR };

/// Result of matching a Gibbs state's energy to a reduced state.
struct BetaFit {
  double beta = 0.0;
  double residual = 0.0;  // trace distance to the fitted Gibbs state
  long iterations = 0;
};

/// Reduced state of a pure bipartite state (index convention j = l*m + k).
DensityMatrix partial_trace(const StateVector& psi, Index n, Index m, Subsystem keep);

/// <psi| M kron I_R |psi> evaluated on the full space.
double subsystem_expectation(const StateVector& psi, const HermitianOperator& m_op,
                             Index n, Index m);

/// exp(-beta H)/Z, evaluated in the eigenbasis of H with a spectral shift
/// so any finite beta is overflow-safe.
DensityMatrix gibbs_state(const HermitianOperator& h, double beta);

/// Tr(M * gibbs_state(H, beta)).
double canonical_average(const HermitianOperator& m_op, const HermitianOperator& h,
                         double beta);

/// Bisection on beta |-> Tr(gibbs_state(H, beta) H), which decreases
/// strictly in beta, until the Gibbs energy matches Tr(rho H) within an
/// absolute beta tolerance of 1e-6. Throws numeric_error (reporting both
/// endpoint energies) when the target is not bracketed.
BetaFit fit_beta(const DensityMatrix& rho, const HermitianOperator& h,
                 double beta_lo, double beta_hi);

/// -sum lambda ln lambda (natural log, 0 ln 0 := 0).
double von_neumann_entropy(const DensityMatrix& rho);

/// -ln Tr(rho^2) (natural log).
double renyi2_entropy(const DensityMatrix& rho);

/// Trace distance between density matrices, in [0, 1].
double trace_distance(const DensityMatrix& rho, const DensityMatrix& sigma);

}  // namespace ethlab
