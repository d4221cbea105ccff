// Seeded sampling of the two randomness sources: Gaussian perturbation
// Hamiltonians and Haar-random unitary eigenbasis maps.
//
// Determinism contract: identical (spec, seed) yields bit-identical output.
// Gaussian variates come from an explicit Box-Muller transform over
// mt19937_64 uniforms rather than std::normal_distribution, so the stream
// does not depend on the standard library implementation.
#pragma once

#include <cstdint>
#include <random>

#include "ethlab/numkernel.hpp"

namespace ethlab {

/// Master seed for a sampling stream.
struct RngSeed {
  std::uint64_t value = 0;
};

/// Hermitian symmetry class of the Gaussian perturbation ensemble.
enum class SymmetryClass {
  kRealSymmetric,    // GOE-type: real entries
  kComplexHermitian  // GUE-type: complex off-diagonal entries
};

/// Parameters of the Gaussian perturbation ensemble.
///
/// Off-diagonal entries have mean 0 and total variance epsilon^2
/// (real-symmetric: real entries; complex-Hermitian: variance split evenly
/// between real and imaginary parts). Diagonal entries are real with
/// variance 2*epsilon^2 (real-symmetric) or epsilon^2 (complex-Hermitian).
struct GaussianEnsembleSpec {
  Index dim = 0;
  double epsilon = 0.0;
  SymmetryClass symmetry_class = SymmetryClass::kRealSymmetric;
};

/// Deterministic standard-normal stream used by all samplers.
class GaussianStream {
 public:
  explicit GaussianStream(RngSeed seed) : engine_(seed.value) {}

  double next();
  Complex next_complex();  // unit total variance

 private:
  double uniform_open();  // uniform on (0,1], never exactly 0

  std::mt19937_64 engine_;
  bool has_cached_ = false;
  double cached_ = 0.0;
};

/// Random Hermitian perturbation with the second-moment structure above.
HermitianOperator sample_gaussian_perturbation(const GaussianEnsembleSpec& spec,
                                               RngSeed seed);

/// Haar-distributed unitary via QR of a complex Ginibre matrix with the
/// R-diagonal phase correction (column j multiplied by conj(R_jj)/|R_jj|).
UnitaryMatrix sample_haar_unitary(Index dim, RngSeed seed);

/// Statistically independent per-realization seed stream.
///
/// Injective in the index for a fixed master (bijective 64-bit mixing of an
/// affine index walk), deterministic and order-independent.
RngSeed derive_realization_seed(RngSeed master, std::uint64_t realization_index);

}  // namespace ethlab
