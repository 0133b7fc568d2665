#pragma once

#include <complex>
#include <functional>

#include <Eigen/Dense>

namespace fraclind {

using cplx = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;

struct EigOptions {
  double reconstruct_rtol = 1e-10;
  /// Eigenvector condition number above which the input counts as defective.
  double max_condition = 1e12;
  /// Relative size of the strictly upper Schur factor below which the input
  /// is treated as normal and the Schur vectors are used as eigenvectors.
  double normal_rtol = 1e-12;
  /// Eigenvalues closer than cluster_rtol * ||A||_F are treated as one
  /// repeated eigenvalue when building eigenvectors.
  double cluster_rtol = 1e-10;
};

/// A = vectors * diag(values) * vectors_inv.
struct EigDecomposition {
  ComplexVector values;
  ComplexMatrix vectors;
  ComplexMatrix vectors_inv;
  double condition = 1.0;  ///< 1-norm condition estimate of `vectors`
  double residual = 0.0;   ///< ||V diag V^-1 - A||_F / ||A||_F
  bool unitary = false;    ///< vectors came straight from the Schur basis

  ComplexMatrix reconstruct() const;
};

/// Throws NonFinite / ShapeMismatch when the matrix is not a valid operand.
void require_square_finite(const ComplexMatrix& a, const char* what);

double frobenius(const ComplexMatrix& a);
/// ||A - A^dagger||_F / ||A||_F, zero for the zero matrix.
double hermiticity_residual(const ComplexMatrix& a);
/// 1-norm (max column sum), used for scaling decisions.
double norm1(const ComplexMatrix& a);

EigDecomposition eig_decompose(const ComplexMatrix& a, const EigOptions& opts = {});

/// exp(t A) by scaling-and-squaring Padé. exp(0 A) is the identity exactly.
ComplexMatrix matrix_exp(const ComplexMatrix& a, double t);

/// V diag(f(lambda_i)) V^-1. Throws FunctionDomain when f yields a non-finite value.
ComplexMatrix matrix_function(const ComplexMatrix& a, const std::function<cplx(cplx)>& f,
                              const EigOptions& opts = {});
ComplexMatrix matrix_function(const EigDecomposition& eig, const std::function<cplx(cplx)>& f);

/// Smallest eigenvalue of (A + A^dagger)/2; A must be Hermitian within htol.
double min_hermitian_eigenvalue(const ComplexMatrix& a, double htol = 1e-8);

struct SolveResult {
  ComplexMatrix x;
  double residual = 0.0;  ///< ||AX - B||_F / (||A||_F ||X||_F)
  double rcond = 1.0;
};

struct SolveOptions {
  double rtol = 1e-10;
  /// Reciprocal condition estimate below which A is reported singular.
  double min_rcond = 1e-14;
};

SolveResult solve(const ComplexMatrix& a, const ComplexMatrix& b, const SolveOptions& opts = {});
inline ComplexMatrix linear_solve(const ComplexMatrix& a, const ComplexMatrix& b,
                                  const SolveOptions& opts = {}) {
  return solve(a, b, opts).x;
}

}  // namespace fraclind
