#include "ethlab/system_builder.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>
#include <vector>

namespace ethlab {

namespace {

constexpr Index kMaxCompositeDim = 1 << 14;

}  // namespace

SubsystemSpec::SubsystemSpec(Index dim_, HermitianOperator hamiltonian_)
    : dim(dim_), hamiltonian(std::move(hamiltonian_)) {
  if (dim < 1) throw dimension_error("SubsystemSpec: dim must be >= 1");
  if (hamiltonian.dim() != dim) {
    std::ostringstream os;
    os << "SubsystemSpec: dim " << dim << " does not match Hamiltonian size "
       << hamiltonian.dim();
    throw dimension_error(os.str());
  }
}

Index composite_index(Index l, Index k, Index n, Index m) {
  if (l < 0 || l >= n || k < 0 || k >= m) {
    std::ostringstream os;
    os << "composite_index: (l,k) = (" << l << "," << k
       << ") out of range for n = " << n << ", m = " << m;
    throw dimension_error(os.str());
  }
  return l * m + k;
}

std::pair<Index, Index> composite_index_inverse(Index j, Index n, Index m) {
  if (j < 0 || j >= n * m) {
    std::ostringstream os;
    os << "composite_index_inverse: j = " << j << " out of range for N = " << n * m;
    throw dimension_error(os.str());
  }
  return {j / m, j % m};
}

CompositeSystem::CompositeSystem(SubsystemSpec sub_s, SubsystemSpec sub_r)
    : sub_s_(std::move(sub_s)), sub_r_(std::move(sub_r)) {
  const Index n = sub_s_.dim;
  const Index m = sub_r_.dim;
  if (n > kMaxCompositeDim / m) {
    std::ostringstream os;
    os << "CompositeSystem: N = " << n << "*" << m << " exceeds the size budget "
       << kMaxCompositeDim;
    throw dimension_error(os.str());
  }
  es_s_.emplace(hermitian_eigendecomposition(sub_s_.hamiltonian));
  es_r_.emplace(hermitian_eigendecomposition(sub_r_.hamiltonian));

  const ComplexMatrix eye_n = ComplexMatrix::Identity(n, n);
  const ComplexMatrix eye_m = ComplexMatrix::Identity(m, m);
  h0_.emplace(kron(sub_s_.hamiltonian.matrix(), eye_m) +
              kron(eye_n, sub_r_.hamiltonian.matrix()));

  // Product basis: column l*m+k of kron(V_S, V_R) is alpha_l kron beta_k.
  ComplexMatrix vectors = kron(es_s_->vector_matrix(), es_r_->vector_matrix());
  RealVector values(n * m);
  for (Index l = 0; l < n; ++l) {
    for (Index k = 0; k < m; ++k) {
      values[l * m + k] = es_s_->values()[l] + es_r_->values()[k];
    }
  }
  UnitaryMatrix basis(std::move(vectors));

  // The product states must diagonalize H0 within the additive tolerance.
  const double residual =
      max_abs(h0_->matrix() * basis.matrix() - basis.matrix() * values.asDiagonal());
  double bound = 0.0;
  for (Index l = 0; l < n; ++l) {
    for (Index k = 0; k < m; ++k) {
      bound = std::max(bound, std::abs(es_s_->values()[l]) +
                                  std::abs(es_r_->values()[k]) + 1.0);
    }
  }
  if (residual > 1e-10 * bound) {
    std::ostringstream os;
    os << "CompositeSystem: product basis residual " << residual << " exceeds "
       << 1e-10 * bound;
    throw numeric_error(os.str());
  }
  product_basis_.emplace(std::move(values), std::move(basis));
}

EigenSystem CompositeSystem::sorted_product_basis() const {
  const EigenSystem& pb = *product_basis_;
  const Index dim = pb.dim();
  std::vector<Index> order(static_cast<std::size_t>(dim));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
    return pb.values()[a] < pb.values()[b];
  });
  RealVector values(dim);
  ComplexMatrix vectors(dim, dim);
  for (Index i = 0; i < dim; ++i) {
    values[i] = pb.values()[order[static_cast<std::size_t>(i)]];
    vectors.col(i) = pb.vector_matrix().col(order[static_cast<std::size_t>(i)]);
  }
  return EigenSystem(std::move(values), UnitaryMatrix(std::move(vectors)));
}

CompositeSystem build_composite(SubsystemSpec sub_s, SubsystemSpec sub_r) {
  return CompositeSystem(std::move(sub_s), std::move(sub_r));
}

PerturbedSystem perturb_explicit(const CompositeSystem& cs,
                                 const HermitianOperator& h_int) {
  const Index dim = cs.total_dim();
  if (h_int.dim() != dim) {
    std::ostringstream os;
    os << "perturb_explicit: H_int dim " << h_int.dim()
       << " does not match composite N = " << dim;
    throw dimension_error(os.str());
  }
  HermitianOperator h_total(cs.h0().matrix() + h_int.matrix());
  EigenSystem es = hermitian_eigendecomposition(h_total);

  // p_ij = <phi_j | psi_i> relative to the energy-sorted product basis.
  const EigenSystem sorted = cs.sorted_product_basis();
  ComplexMatrix overlap = sorted.vector_matrix().adjoint() * es.vector_matrix();
  UnitaryMatrix p(overlap.transpose());
  return PerturbedSystem{cs, PerturbMode::kExplicitHamiltonian,
                         std::move(h_total), std::move(es), std::move(p)};
}

PerturbedSystem perturb_haar(const CompositeSystem& cs, RngSeed seed) {
  const Index dim = cs.total_dim();
  UnitaryMatrix p = sample_haar_unitary(dim, seed);
  const EigenSystem sorted = cs.sorted_product_basis();
  ComplexMatrix vectors = sorted.vector_matrix() * p.matrix().transpose();
  EigenSystem es(sorted.values(), UnitaryMatrix(std::move(vectors)));
  return PerturbedSystem{cs, PerturbMode::kHaarRotation, std::nullopt,
                         std::move(es), std::move(p)};
}

HermitianOperator band_limit_perturbation(const CompositeSystem& cs,
                                          const HermitianOperator& h_int,
                                          double delta_e) {
  const Index dim = cs.total_dim();
  if (h_int.dim() != dim) {
    throw dimension_error("band_limit_perturbation: dim mismatch");
  }
  if (!(delta_e > 0.0)) {
    throw numeric_error("band_limit_perturbation: delta_e must be > 0");
  }
  const EigenSystem& pb = cs.product_basis();
  const ComplexMatrix& phi = pb.vector_matrix();
  ComplexMatrix in_basis = phi.adjoint() * h_int.matrix() * phi;
  for (Index j = 0; j < dim; ++j) {
    for (Index i = 0; i < dim; ++i) {
      if (std::abs(pb.values()[i] - pb.values()[j]) > delta_e) {
        in_basis(i, j) = Complex(0.0, 0.0);
      }
    }
  }
  ComplexMatrix back = phi * in_basis * phi.adjoint();
  return HermitianOperator(0.5 * (back + back.adjoint().eval()));
}

}  // namespace ethlab
