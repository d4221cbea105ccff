// Dense complex matrix algebra and Hermitian eigendecomposition.
//
// All heavier routines are backed by Eigen; the types below enforce the
// contracts (Hermiticity, unitarity, normalization) that the rest of the
// library relies on. Values are immutable after construction and safe to
// share across threads.
#pragma once

#include <Eigen/Dense>
#include <complex>
#include <utility>
#include <vector>

#include "ethlab/errors.hpp"

namespace ethlab {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Largest entry magnitude, max over |Re| and |Im| taken jointly as |z|.
double max_abs(const ComplexMatrix& m);

/// Throws dimension_error / numeric_error unless m is a non-empty matrix of
/// finite entries. `what` names the offending object in the message.
void require_finite(const ComplexMatrix& m, const char* what);

/// Hermitian operator: square, finite, exactly symmetrized storage.
///
/// Construction accepts input with ||M - M^dag||_max <= 1e-12 * (1 + ||M||_max)
/// and stores (M + M^dag)/2, which is Hermitian to the last bit.
class HermitianOperator {
 public:
  explicit HermitianOperator(ComplexMatrix m);

  Index dim() const { return mat_.rows(); }
  const ComplexMatrix& matrix() const { return mat_; }
  double max_entry() const { return max_entry_; }

  /// Identity observable of the given dimension.
  static HermitianOperator identity(Index dim);

 private:
  ComplexMatrix mat_;
  double max_entry_ = 0.0;
};

/// Unitary matrix with ||U^dag U - I||_max <= 1e-10 checked at construction.
class UnitaryMatrix {
 public:
  explicit UnitaryMatrix(ComplexMatrix u);

  Index dim() const { return mat_.rows(); }
  const ComplexMatrix& matrix() const { return mat_; }

  /// Deviation from unitarity ||U^dag U - I||_max of the stored matrix.
  double unitarity_defect() const;

 private:
  ComplexMatrix mat_;
};

/// Eigenvalues plus the unitary matrix whose column i is eigenvector i.
///
/// Solver outputs carry ascending eigenvalues. Composite product bases reuse
/// this carrier in index-map order, where the values are generally unsorted;
/// sortedness is a contract of the producing operation, not of the type.
class EigenSystem {
 public:
  EigenSystem(RealVector values, UnitaryMatrix vectors);

  Index dim() const { return values_.size(); }
  const RealVector& values() const { return values_; }
  const UnitaryMatrix& vectors() const { return vectors_; }
  const ComplexMatrix& vector_matrix() const { return vectors_.matrix(); }

  bool is_sorted() const;

 private:
  RealVector values_;
  UnitaryMatrix vectors_;
};

/// Pure state: complex amplitudes with unit 2-norm within 1e-12.
class StateVector {
 public:
  explicit StateVector(ComplexVector amplitudes);

  /// Normalizes v (rejecting zero vectors) and wraps it.
  static StateVector normalized(ComplexVector v);

  Index dim() const { return amp_.size(); }
  const ComplexVector& amplitudes() const { return amp_; }

 private:
  ComplexVector amp_;
};

/// Full eigendecomposition of a Hermitian operator.
///
/// Eigenvalues ascend; the reconstruction V diag(values) V^dag matches H
/// within 1e-9 * dim * ||H||_max, which is verified before returning.
EigenSystem hermitian_eigendecomposition(const HermitianOperator& h);

/// Kronecker product, (A kron B)[i*p + k, j*q + l] = A(i,j) * B(k,l)
/// for B of size p x q. Throws dimension_error when the result would
/// exceed the dense size budget.
ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b);

/// Trace distance (1/2) sum |eig(rho - sigma)| of two equally sized
/// Hermitian matrices. Lands in [0,1] when both arguments are density
/// matrices.
double trace_distance(const ComplexMatrix& rho, const ComplexMatrix& sigma);

}  // namespace ethlab
