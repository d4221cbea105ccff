#include "ethlab/ensembles.hpp"

#include <cmath>
#include <numbers>

namespace ethlab {

double GaussianStream::uniform_open() {
  // 53-bit mantissa, shifted into (0,1] so log() below is always finite.
  const std::uint64_t bits = engine_() >> 11;
  return (static_cast<double>(bits) + 1.0) * 0x1.0p-53;
}

double GaussianStream::next() {
  if (has_cached_) {
    has_cached_ = false;
    return cached_;
  }
  const double u1 = uniform_open();
  const double u2 = uniform_open();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double phi = 2.0 * std::numbers::pi * u2;
  cached_ = r * std::sin(phi);
  has_cached_ = true;
  return r * std::cos(phi);
}

Complex GaussianStream::next_complex() {
  constexpr double inv_sqrt2 = 0.7071067811865476;
  const double re = next();
  const double im = next();
  return Complex(re * inv_sqrt2, im * inv_sqrt2);
}

HermitianOperator sample_gaussian_perturbation(const GaussianEnsembleSpec& spec,
                                               RngSeed seed) {
  if (spec.dim < 1) {
    throw dimension_error("sample_gaussian_perturbation: dim must be >= 1");
  }
  if (!(spec.epsilon > 0.0) || !std::isfinite(spec.epsilon)) {
    throw numeric_error("sample_gaussian_perturbation: epsilon must be finite and > 0");
  }
  GaussianStream g(seed);
  const Index n = spec.dim;
  const double eps = spec.epsilon;
  ComplexMatrix h = ComplexMatrix::Zero(n, n);

  if (spec.symmetry_class == SymmetryClass::kRealSymmetric) {
    const double diag_sd = eps * std::sqrt(2.0);
    for (Index i = 0; i < n; ++i) {
      h(i, i) = diag_sd * g.next();
      for (Index j = i + 1; j < n; ++j) {
        const double x = eps * g.next();
        h(i, j) = x;
        h(j, i) = x;
      }
    }
  } else {
    for (Index i = 0; i < n; ++i) {
      h(i, i) = eps * g.next();
      for (Index j = i + 1; j < n; ++j) {
        const Complex z = eps * g.next_complex();
        h(i, j) = z;
        h(j, i) = std::conj(z);
      }
    }
  }
  return HermitianOperator(std::move(h));
}

UnitaryMatrix sample_haar_unitary(Index dim, RngSeed seed) {
  if (dim < 1) throw dimension_error("sample_haar_unitary: dim must be >= 1");
  GaussianStream g(seed);
  ComplexMatrix ginibre(dim, dim);
  // Column-major fill order is part of the determinism contract.
  for (Index j = 0; j < dim; ++j) {
    for (Index i = 0; i < dim; ++i) {
      ginibre(i, j) = Complex(g.next(), g.next());
    }
  }
  Eigen::HouseholderQR<ComplexMatrix> qr(ginibre);
  ComplexMatrix q = qr.householderQ();
  const ComplexMatrix& qr_packed = qr.matrixQR();
  for (Index j = 0; j < dim; ++j) {
    const Complex rjj = qr_packed(j, j);
    const double mag = std::abs(rjj);
    // R_jj vanishes only on a measure-zero set; fall back to phase 1.
    const Complex phase = mag > 0.0 ? std::conj(rjj) / mag : Complex(1.0, 0.0);
    q.col(j) *= phase;
  }
  return UnitaryMatrix(std::move(q));
}

RngSeed derive_realization_seed(RngSeed master, std::uint64_t realization_index) {
  // splitmix64 finalizer over an affine walk: the multiplier is odd and the
  // finalizer is a 64-bit bijection, so distinct indices never collide.
  std::uint64_t z = master.value + 0x9e3779b97f4a7c15ULL * (realization_index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return RngSeed{z ^ (z >> 31)};
}

}  // namespace ethlab
