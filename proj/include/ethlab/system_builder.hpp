// Bipartite composite systems: non-interacting H0 with an exact product
// eigenbasis, the (l,k) <-> j index map, and perturbed systems built either
// from an explicit interaction Hamiltonian or from a Haar-random rotation of
// the product eigenbasis.
#pragma once

#include <optional>
#include <utility>

#include "ethlab/ensembles.hpp"
#include "ethlab/numkernel.hpp"

namespace ethlab {

/// One subsystem: its dimension and Hamiltonian.
struct SubsystemSpec {
  SubsystemSpec(Index dim_, HermitianOperator hamiltonian_);

  Index dim;
  HermitianOperator hamiltonian;
};

/// Flattened composite index j = l*m + k (0-based).
Index composite_index(Index l, Index k, Index n, Index m);

/// Inverse of composite_index: j -> (l, k).
std::pair<Index, Index> composite_index_inverse(Index j, Index n, Index m);

/// Non-interacting composite H0 = H_S kron I_m + I_n kron H_R with its
/// product eigenbasis kept in index-map order (values generally unsorted).
class CompositeSystem {
 public:
  CompositeSystem(SubsystemSpec sub_s, SubsystemSpec sub_r);

  Index n() const { return sub_s_.dim; }
  Index m() const { return sub_r_.dim; }
  Index total_dim() const { return h0_->dim(); }

  const SubsystemSpec& subsystem_s() const { return sub_s_; }
  const SubsystemSpec& subsystem_r() const { return sub_r_; }
  const HermitianOperator& h0() const { return *h0_; }

  /// Subsystem spectra a_l, b_k (ascending).
  const RealVector& values_s() const { return es_s_->values(); }
  const RealVector& values_r() const { return es_r_->values(); }
  const EigenSystem& eigensystem_s() const { return *es_s_; }
  const EigenSystem& eigensystem_r() const { return *es_r_; }

  /// Product basis in index-map order: column j = alpha_l kron beta_k,
  /// eigenvalue a_l + b_k for j = l*m + k.
  const EigenSystem& product_basis() const { return *product_basis_; }

  /// Product basis with columns permuted into ascending energy order.
  EigenSystem sorted_product_basis() const;

 private:
  SubsystemSpec sub_s_;
  SubsystemSpec sub_r_;
  std::optional<EigenSystem> es_s_;
  std::optional<EigenSystem> es_r_;
  std::optional<HermitianOperator> h0_;
  std::optional<EigenSystem> product_basis_;
};

enum class PerturbMode { kExplicitHamiltonian, kHaarRotation };

/// A perturbed composite: eigensystem of the perturbed dynamics plus the
/// basis-change matrix P with p_ij = <phi_j | psi_i> relative to the
/// energy-sorted product basis.
struct PerturbedSystem {
  CompositeSystem composite;
  PerturbMode mode;
  std::optional<HermitianOperator> hamiltonian;  // absent in Haar mode
  EigenSystem eigensystem;
  UnitaryMatrix p;
};

CompositeSystem build_composite(SubsystemSpec sub_s, SubsystemSpec sub_r);

/// Diagonalizes H = H0 + H_int and records the overlap matrix P.
PerturbedSystem perturb_explicit(const CompositeSystem& cs,
                                 const HermitianOperator& h_int);

/// Idealized model: eigenvectors are a Haar rotation of the sorted product
/// basis, eigenvalues carried over from H0.
PerturbedSystem perturb_haar(const CompositeSystem& cs, RngSeed seed);

/// Restricts a perturbation to the energy window |E_j - E_j'| <= delta_e
/// between product states (entries outside the band are zeroed in the
/// product basis, then transformed back).
HermitianOperator band_limit_perturbation(const CompositeSystem& cs,
                                          const HermitianOperator& h_int,
                                          double delta_e);

}  // namespace ethlab
