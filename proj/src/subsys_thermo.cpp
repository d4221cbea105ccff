#include "ethlab/subsys_thermo.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <sstream>

namespace ethlab {

DensityMatrix::DensityMatrix(const HermitianOperator& rho) {
  const Complex tr = rho.matrix().trace();
  if (std::abs(tr - Complex(1.0, 0.0)) > 1e-10) {
    std::ostringstream os;
    os << "DensityMatrix: trace " << tr.real() << " deviates from 1 by more than 1e-10";
    throw numeric_error(os.str());
  }
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(rho.matrix());
  if (solver.info() != Eigen::Success) {
    throw numeric_error("DensityMatrix: eigenvalue solve failed");
  }
  RealVector eigs = solver.eigenvalues();
  if (eigs.minCoeff() < -1e-10) {
    std::ostringstream os;
    os << "DensityMatrix: minimum eigenvalue " << eigs.minCoeff()
       << " below -1e-10";
    throw numeric_error(os.str());
  }
  for (Index i = 0; i < eigs.size(); ++i) {
    if (eigs[i] < 0.0) eigs[i] = 0.0;
  }
  const double total = eigs.sum();
  if (!(total > 0.0)) throw numeric_error("DensityMatrix: zero spectrum");
  eigs /= total;
  eigs_ = eigs;
  ComplexMatrix rebuilt =
      solver.eigenvectors() * eigs.asDiagonal() * solver.eigenvectors().adjoint();
  mat_ = 0.5 * (rebuilt + rebuilt.adjoint().eval());
}

DensityMatrix DensityMatrix::maximally_mixed(Index dim) {
  if (dim < 1) throw dimension_error("DensityMatrix::maximally_mixed: dim >= 1");
  ComplexMatrix m = ComplexMatrix::Identity(dim, dim) / static_cast<double>(dim);
  return DensityMatrix(HermitianOperator(std::move(m)));
}

DensityMatrix partial_trace(const StateVector& psi, Index n, Index m, Subsystem keep) {
  if (n < 1 || m < 1 || psi.dim() != n * m) {
    std::ostringstream os;
    os << "partial_trace: state dim " << psi.dim() << " does not factor as " << n
       << "*" << m;
    throw dimension_error(os.str());
  }
  using RowMajorMap =
      Eigen::Map<const Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic,
                                     Eigen::RowMajor>>;
  RowMajorMap grid(psi.amplitudes().data(), n, m);
  ComplexMatrix reduced;
  if (keep == Subsystem::kS) {
    reduced = grid * grid.adjoint();
  } else {
    reduced = grid.transpose() * grid.conjugate();
  }
  return DensityMatrix(HermitianOperator(0.5 * (reduced + reduced.adjoint().eval())));
}

double subsystem_expectation(const StateVector& psi, const HermitianOperator& m_op,
                             Index n, Index m) {
  if (m_op.dim() != n) {
    std::ostringstream os;
    os << "subsystem_expectation: observable dim " << m_op.dim()
       << " does not match n = " << n;
    throw dimension_error(os.str());
  }
  if (psi.dim() != n * m) {
    throw dimension_error("subsystem_expectation: state dim does not factor as n*m");
  }
  const HermitianOperator extended(
      kron(m_op.matrix(), ComplexMatrix::Identity(m, m)));
  return eigenstate_expectation(psi, extended);
}

DensityMatrix gibbs_state(const HermitianOperator& h, double beta) {
  if (!std::isfinite(beta)) throw numeric_error("gibbs_state: beta must be finite");
  const EigenSystem es = hermitian_eigendecomposition(h);
  const RealVector& e = es.values();
  // Shift so every exponent is <= 0 regardless of the sign of beta.
  const double shift = beta >= 0.0 ? e.minCoeff() : e.maxCoeff();
  RealVector weights(e.size());
  for (Index i = 0; i < e.size(); ++i) {
    weights[i] = std::exp(-beta * (e[i] - shift));
  }
  weights /= weights.sum();
  ComplexMatrix rho = es.vector_matrix() * weights.asDiagonal() *
                      es.vector_matrix().adjoint();
  return DensityMatrix(HermitianOperator(0.5 * (rho + rho.adjoint().eval())));
}

double canonical_average(const HermitianOperator& m_op, const HermitianOperator& h,
                         double beta) {
  if (m_op.dim() != h.dim()) {
    throw dimension_error("canonical_average: observable/Hamiltonian dim mismatch");
  }
  return (m_op.matrix() * gibbs_state(h, beta).matrix()).trace().real();
}

namespace {

double gibbs_energy(const RealVector& e, double beta) {
  const double shift = beta >= 0.0 ? e.minCoeff() : e.maxCoeff();
  double z = 0.0;
  double acc = 0.0;
  for (Index i = 0; i < e.size(); ++i) {
    const double w = std::exp(-beta * (e[i] - shift));
    z += w;
    acc += e[i] * w;
  }
  return acc / z;
}

}  // namespace

BetaFit fit_beta(const DensityMatrix& rho, const HermitianOperator& h,
                 double beta_lo, double beta_hi) {
  if (rho.dim() != h.dim()) throw dimension_error("fit_beta: dim mismatch");
  if (!(beta_lo < beta_hi)) throw numeric_error("fit_beta: empty bracket");

  const double target = (rho.matrix() * h.matrix()).trace().real();
  const EigenSystem es = hermitian_eigendecomposition(h);
  const RealVector& e = es.values();

  const double e_lo = gibbs_energy(e, beta_lo);  // high-temperature end
  const double e_hi = gibbs_energy(e, beta_hi);
  if (!(target < e_lo) || !(target > e_hi)) {
    std::ostringstream os;
    os << "fit_beta: target energy " << target
       << " is outside the achievable open interval (" << e_hi << ", " << e_lo
       << ") for beta in [" << beta_lo << ", " << beta_hi << "]";
    throw numeric_error(os.str());
  }

  // Converge the bracket well inside the 1e-6 contract so the trace-distance
  // residual of an exact Gibbs round trip is negligible.
  double lo = beta_lo;
  double hi = beta_hi;
  long iterations = 0;
  while (hi - lo > 1e-12) {
    const double mid = 0.5 * (lo + hi);
    if (gibbs_energy(e, mid) > target) {
      lo = mid;  // energy still too high, need larger beta
    } else {
      hi = mid;
    }
    ++iterations;
    if (iterations > 200) break;
  }
  BetaFit fit;
  fit.beta = 0.5 * (lo + hi);
  fit.iterations = iterations;
  fit.residual = trace_distance(rho, gibbs_state(h, fit.beta));
  return fit;
}

double von_neumann_entropy(const DensityMatrix& rho) {
  double s = 0.0;
  for (Index i = 0; i < rho.eigenvalues().size(); ++i) {
    const double p = rho.eigenvalues()[i];
    if (p > 0.0) s -= p * std::log(p);
  }
  return s < 0.0 ? 0.0 : s;
}

double renyi2_entropy(const DensityMatrix& rho) {
  const double purity = rho.eigenvalues().squaredNorm();
  const double s = -std::log(purity);
  return s < 0.0 ? 0.0 : s;
}

double trace_distance(const DensityMatrix& rho, const DensityMatrix& sigma) {
  return trace_distance(rho.matrix(), sigma.matrix());
}

}  // namespace ethlab
