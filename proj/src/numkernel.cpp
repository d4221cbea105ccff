#include "ethlab/numkernel.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <sstream>

namespace ethlab {

namespace {

// Dense result budget: keeps kron and composite sizes at desk scale.
constexpr Index kMaxDenseDim = 1 << 14;

std::string dim_string(const ComplexMatrix& m) {
  std::ostringstream os;
  os << m.rows() << "x" << m.cols();
  return os.str();
}

}  // namespace

double max_abs(const ComplexMatrix& m) {
  if (m.size() == 0) return 0.0;
  return m.cwiseAbs().maxCoeff();
}

void require_finite(const ComplexMatrix& m, const char* what) {
  if (m.rows() < 1 || m.cols() < 1) {
    throw dimension_error(std::string(what) + ": empty matrix");
  }
  if (!m.allFinite()) {
    throw numeric_error(std::string(what) + ": non-finite entries");
  }
}

HermitianOperator::HermitianOperator(ComplexMatrix m) {
  require_finite(m, "HermitianOperator");
  if (m.rows() != m.cols()) {
    throw dimension_error("HermitianOperator: matrix is " + dim_string(m) +
                          ", expected square");
  }
  const double scale = 1.0 + max_abs(m);
  const double defect = max_abs(m - m.adjoint());
  if (defect > 1e-12 * scale) {
    std::ostringstream os;
    os << "HermitianOperator: ||M - M^dag||_max = " << defect
       << " exceeds 1e-12 * (1 + ||M||_max) = " << 1e-12 * scale;
    throw numeric_error(os.str());
  }
  mat_ = 0.5 * (m + m.adjoint().eval());
  max_entry_ = max_abs(mat_);
}

HermitianOperator HermitianOperator::identity(Index dim) {
  return HermitianOperator(ComplexMatrix::Identity(dim, dim));
}

UnitaryMatrix::UnitaryMatrix(ComplexMatrix u) {
  require_finite(u, "UnitaryMatrix");
  if (u.rows() != u.cols()) {
    throw dimension_error("UnitaryMatrix: matrix is " + dim_string(u) +
                          ", expected square");
  }
  mat_ = std::move(u);
  const double defect = unitarity_defect();
  if (defect > 1e-10) {
    std::ostringstream os;
    os << "UnitaryMatrix: ||U^dag U - I||_max = " << defect << " exceeds 1e-10";
    throw numeric_error(os.str());
  }
}

double UnitaryMatrix::unitarity_defect() const {
  const Index d = mat_.rows();
  return max_abs(mat_.adjoint() * mat_ - ComplexMatrix::Identity(d, d));
}

EigenSystem::EigenSystem(RealVector values, UnitaryMatrix vectors)
    : values_(std::move(values)), vectors_(std::move(vectors)) {
  if (values_.size() != vectors_.dim()) {
    throw dimension_error("EigenSystem: value count does not match vectors");
  }
  if (!values_.allFinite()) {
    throw numeric_error("EigenSystem: non-finite eigenvalues");
  }
}

bool EigenSystem::is_sorted() const {
  for (Index i = 0; i + 1 < values_.size(); ++i) {
    if (values_[i] > values_[i + 1]) return false;
  }
  return true;
}

StateVector::StateVector(ComplexVector amplitudes) : amp_(std::move(amplitudes)) {
  if (amp_.size() < 1) throw dimension_error("StateVector: empty");
  if (!amp_.allFinite()) throw numeric_error("StateVector: non-finite amplitudes");
  const double norm = amp_.norm();
  if (std::abs(norm - 1.0) > 1e-12) {
    std::ostringstream os;
    os << "StateVector: ||psi|| = " << norm << " deviates from 1 by more than 1e-12";
    throw numeric_error(os.str());
  }
}

StateVector StateVector::normalized(ComplexVector v) {
  const double norm = v.norm();
  if (!(norm > 0.0) || !std::isfinite(norm)) {
    throw numeric_error("StateVector::normalized: zero or non-finite norm");
  }
  v /= norm;
  return StateVector(std::move(v));
}

EigenSystem hermitian_eigendecomposition(const HermitianOperator& h) {
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(h.matrix());
  if (solver.info() != Eigen::Success) {
    std::ostringstream os;
    os << "hermitian_eigendecomposition: solver failed to converge for dim "
       << h.dim() << " (||H||_max = " << h.max_entry() << ")";
    throw numeric_error(os.str());
  }
  RealVector values = solver.eigenvalues();
  ComplexMatrix vectors = solver.eigenvectors();

  const double tol = 1e-9 * static_cast<double>(h.dim()) * std::max(h.max_entry(), 1e-300);
  const double residual =
      max_abs(vectors * values.asDiagonal() * vectors.adjoint() - h.matrix());
  if (residual > tol) {
    std::ostringstream os;
    os << "hermitian_eigendecomposition: reconstruction residual " << residual
       << " exceeds " << tol << " at dim " << h.dim();
    throw numeric_error(os.str());
  }
  return EigenSystem(std::move(values), UnitaryMatrix(std::move(vectors)));
}

ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b) {
  require_finite(a, "kron lhs");
  require_finite(b, "kron rhs");
  if (a.rows() > kMaxDenseDim / b.rows() || a.cols() > kMaxDenseDim / b.cols()) {
    throw dimension_error("kron: result " + dim_string(a) + " kron " +
                          dim_string(b) + " exceeds the dense size budget");
  }
  ComplexMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index j = 0; j < a.cols(); ++j) {
    for (Index i = 0; i < a.rows(); ++i) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

double trace_distance(const ComplexMatrix& rho, const ComplexMatrix& sigma) {
  if (rho.rows() != sigma.rows() || rho.cols() != sigma.cols()) {
    throw dimension_error("trace_distance: shapes " + dim_string(rho) + " vs " +
                          dim_string(sigma));
  }
  const HermitianOperator diff(rho - sigma);
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(diff.matrix(),
                                                      Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    throw numeric_error("trace_distance: eigenvalue solve failed");
  }
  return 0.5 * solver.eigenvalues().cwiseAbs().sum();
}

}  // namespace ethlab
