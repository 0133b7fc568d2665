#include "fraclind/matrix_engine.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include <unsupported/Eigen/MatrixFunctions>

#include "fraclind/errors.hpp"

namespace fraclind {

namespace {

bool all_finite(const ComplexMatrix& a) {
  for (Eigen::Index j = 0; j < a.cols(); ++j)
    for (Eigen::Index i = 0; i < a.rows(); ++i)
      if (!std::isfinite(a(i, j).real()) || !std::isfinite(a(i, j).imag())) return false;
  return true;
}

// Right eigenvectors of an upper triangular matrix by back-substitution.
// Column k has a unit entry at row k and zeros below, so the result is
// always invertible; its conditioning measures how close T is to defective.
// Eigenvalues within cluster_tol of each other count as one repeated value:
// when the coupling to be cancelled is at rounding level the component is
// set to zero (a genuine repeated eigenvalue), otherwise it is divided by the
// floor and the blow-up flags the matrix as defective.
ComplexMatrix triangular_eigenvectors(const ComplexMatrix& t, double cluster_rtol) {
  const Eigen::Index n = t.rows();
  const double tn = std::max(t.norm(), 1e-300);
  const double floor = std::numeric_limits<double>::epsilon() * tn;
  const double cluster = cluster_rtol * tn;
  ComplexMatrix x = ComplexMatrix::Zero(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    x(k, k) = 1.0;
    for (Eigen::Index i = k - 1; i >= 0; --i) {
      cplx acc = 0.0;
      double scale = 0.0;
      for (Eigen::Index j = i + 1; j <= k; ++j) {
        acc += t(i, j) * x(j, k);
        scale += std::abs(t(i, j) * x(j, k));
      }
      cplx denom = t(i, i) - t(k, k);
      if (std::abs(denom) <= cluster && std::abs(acc) <= cluster_rtol * std::max(scale, tn)) {
        x(i, k) = 0.0;
        continue;
      }
      if (std::abs(denom) < floor) denom = floor;
      x(i, k) = -acc / denom;
    }
    x.col(k).normalize();
  }
  return x;
}

}  // namespace

void require_square_finite(const ComplexMatrix& a, const char* what) {
  if (a.rows() == 0 || a.rows() != a.cols()) {
    std::ostringstream os;
    os << what << " must be square and non-empty, got " << a.rows() << "x" << a.cols();
    throw ShapeMismatch(os.str());
  }
  if (!all_finite(a)) throw NonFinite(std::string(what) + " has NaN or Inf entries");
}

double frobenius(const ComplexMatrix& a) { return a.norm(); }

double hermiticity_residual(const ComplexMatrix& a) {
  const double n = a.norm();
  if (n == 0.0) return 0.0;
  return (a - a.adjoint()).norm() / n;
}

double norm1(const ComplexMatrix& a) {
  if (a.size() == 0) return 0.0;
  return a.cwiseAbs().colwise().sum().maxCoeff();
}

ComplexMatrix EigDecomposition::reconstruct() const {
  return vectors * values.asDiagonal() * vectors_inv;
}

EigDecomposition eig_decompose(const ComplexMatrix& a, const EigOptions& opts) {
  require_square_finite(a, "eig_decompose input");
  Eigen::ComplexSchur<ComplexMatrix> schur(a, true);
  if (schur.info() != Eigen::Success) throw NonDiagonalizable("Schur iteration did not converge");
  const ComplexMatrix& t = schur.matrixT();
  const ComplexMatrix& u = schur.matrixU();

  EigDecomposition out;
  out.values = t.diagonal();
  const double anorm = a.norm();
  const ComplexMatrix upper = t.triangularView<Eigen::StrictlyUpper>();
  if (upper.norm() <= opts.normal_rtol * std::max(anorm, 1e-300)) {
    out.vectors = u;
    out.vectors_inv = u.adjoint();
    out.unitary = true;
    out.condition = norm1(u) * norm1(out.vectors_inv);
  } else {
    out.vectors = u * triangular_eigenvectors(t, opts.cluster_rtol);
    Eigen::PartialPivLU<ComplexMatrix> lu(out.vectors);
    out.vectors_inv = lu.inverse();
    out.condition = norm1(out.vectors) * norm1(out.vectors_inv);
    if (!std::isfinite(out.condition) || out.condition > opts.max_condition) {
      std::ostringstream os;
      os << "eigenvector condition " << out.condition << " exceeds " << opts.max_condition;
      throw NonDiagonalizable(os.str());
    }
  }
  const double denom = anorm > 0.0 ? anorm : 1.0;
  out.residual = (out.reconstruct() - a).norm() / denom;
  return out;
}

ComplexMatrix matrix_exp(const ComplexMatrix& a, double t) {
  require_square_finite(a, "matrix_exp input");
  if (!std::isfinite(t)) throw DomainError("matrix_exp time must be finite");
  const Eigen::Index n = a.rows();
  if (t == 0.0) return ComplexMatrix::Identity(n, n);
  ComplexMatrix scaled = a * t;
  ComplexMatrix out = scaled.exp();
  if (!all_finite(out)) throw Overflow("exp(tA) left the representable range; reduce the time step");
  return out;
}

ComplexMatrix matrix_function(const EigDecomposition& eig, const std::function<cplx(cplx)>& f) {
  ComplexVector fv(eig.values.size());
  for (Eigen::Index i = 0; i < fv.size(); ++i) {
    fv(i) = f(eig.values(i));
    if (!std::isfinite(fv(i).real()) || !std::isfinite(fv(i).imag())) {
      std::ostringstream os;
      os << "function undefined at eigenvalue " << eig.values(i);
      throw FunctionDomain(os.str());
    }
  }
  return eig.vectors * fv.asDiagonal() * eig.vectors_inv;
}

ComplexMatrix matrix_function(const ComplexMatrix& a, const std::function<cplx(cplx)>& f,
                              const EigOptions& opts) {
  return matrix_function(eig_decompose(a, opts), f);
}

double min_hermitian_eigenvalue(const ComplexMatrix& a, double htol) {
  require_square_finite(a, "min_hermitian_eigenvalue input");
  const double h = hermiticity_residual(a);
  if (h > htol) {
    std::ostringstream os;
    os << "relative anti-Hermitian part " << h << " exceeds " << htol;
    throw NotHermitian(os.str());
  }
  const ComplexMatrix sym = 0.5 * (a + a.adjoint());
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(sym, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

SolveResult solve(const ComplexMatrix& a, const ComplexMatrix& b, const SolveOptions& opts) {
  require_square_finite(a, "linear_solve matrix");
  if (b.rows() != a.rows()) throw ShapeMismatch("linear_solve right-hand side row count");
  Eigen::PartialPivLU<ComplexMatrix> lu(a);
  SolveResult out;
  out.rcond = lu.rcond();
  if (!(out.rcond >= opts.min_rcond)) {
    std::ostringstream os;
    os << "reciprocal condition " << out.rcond << " below " << opts.min_rcond;
    throw Singular(os.str());
  }
  out.x = lu.solve(b);
  const double scale = a.norm() * out.x.norm();
  out.residual = scale > 0.0 ? (a * out.x - b).norm() / scale : (a * out.x - b).norm();
  if (!(out.residual <= opts.rtol)) {
    std::ostringstream os;
    os << "solve residual " << out.residual << " exceeds " << opts.rtol;
    throw Singular(os.str());
  }
  return out;
}

}  // namespace fraclind
