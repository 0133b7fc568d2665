#include "fraclind/liouville.hpp"

#include <cmath>
#include <sstream>

#include "fraclind/errors.hpp"

namespace fraclind {

namespace {

const cplx kI{0.0, 1.0};

ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b) {
  ComplexMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index j = 0; j < a.cols(); ++j)
    for (Eigen::Index i = 0; i < a.rows(); ++i)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

Eigen::Index isqrt_exact(Eigen::Index n) {
  auto r = static_cast<Eigen::Index>(std::llround(std::sqrt(static_cast<double>(n))));
  return r * r == n ? r : -1;
}

void require_same_dim(const SuperOperator& a, const SuperOperator& b) {
  if (a.dim() != b.dim()) throw ShapeMismatch("superoperators act on different spaces");
}

void require_hermitian(const ComplexMatrix& h, double tol, const char* what) {
  const double r = hermiticity_residual(h);
  if (r > tol) {
    std::ostringstream os;
    os << what << " is not self-adjoint (relative residual " << r << ")";
    throw NotHermitian(os.str());
  }
}

ComplexMatrix unit(Eigen::Index n, Eigen::Index i, Eigen::Index j) {
  ComplexMatrix e = ComplexMatrix::Zero(n, n);
  e(i, j) = 1.0;
  return e;
}

}  // namespace

ComplexVector vectorize(const ComplexMatrix& a) {
  return Eigen::Map<const ComplexVector>(a.data(), a.size());
}

ComplexMatrix unvectorize(const ComplexVector& v) {
  const Eigen::Index n = isqrt_exact(v.size());
  if (n <= 0) {
    std::ostringstream os;
    os << "vector length " << v.size() << " is not a perfect square";
    throw LengthMismatch(os.str());
  }
  return Eigen::Map<const ComplexMatrix>(v.data(), n, n);
}

SuperOperator::SuperOperator(Eigen::Index dim, ComplexMatrix mat) : dim_(dim), mat_(std::move(mat)) {
  if (dim_ < 1 || mat_.rows() != dim_ * dim_ || mat_.cols() != dim_ * dim_) {
    std::ostringstream os;
    os << "superoperator on N=" << dim_ << " needs a " << dim_ * dim_ << "x" << dim_ * dim_
       << " matrix, got " << mat_.rows() << "x" << mat_.cols();
    throw ShapeMismatch(os.str());
  }
}

SuperOperator SuperOperator::identity(Eigen::Index dim) {
  return {dim, ComplexMatrix::Identity(dim * dim, dim * dim)};
}

SuperOperator SuperOperator::zero(Eigen::Index dim) {
  return {dim, ComplexMatrix::Zero(dim * dim, dim * dim)};
}

ComplexMatrix SuperOperator::apply(const ComplexMatrix& x) const {
  if (x.rows() != dim_ || x.cols() != dim_) throw ShapeMismatch("operand does not match superoperator");
  return unvectorize(mat_ * vectorize(x));
}

SuperOperator SuperOperator::operator*(const SuperOperator& other) const {
  require_same_dim(*this, other);
  return {dim_, mat_ * other.mat_};
}

SuperOperator SuperOperator::operator+(const SuperOperator& other) const {
  require_same_dim(*this, other);
  return {dim_, mat_ + other.mat_};
}

SuperOperator SuperOperator::operator-(const SuperOperator& other) const {
  require_same_dim(*this, other);
  return {dim_, mat_ - other.mat_};
}

SuperOperator SuperOperator::scaled(cplx factor) const { return {dim_, factor * mat_}; }

LindbladModel::LindbladModel(ComplexMatrix h, std::vector<ComplexMatrix> v, double hbar)
    : h_(std::move(h)), v_(std::move(v)), hbar_(hbar) {
  require_square_finite(h_, "Hamiltonian");
  if (!(hbar_ > 0.0) || !std::isfinite(hbar_)) throw DomainError("hbar must be positive");
  require_hermitian(h_, kHermitianTol, "Hamiltonian");
  for (const auto& vk : v_) {
    if (vk.rows() != h_.rows() || vk.cols() != h_.cols())
      throw ShapeMismatch("Lindblad operator size differs from the Hamiltonian");
    require_square_finite(vk, "Lindblad operator");
  }
}

LindbladModel LindbladModel::with_hamiltonian(ComplexMatrix h) const {
  return {std::move(h), v_, hbar_};
}

LindbladModel LindbladModel::with_lindblad_ops(std::vector<ComplexMatrix> v) const {
  return {h_, std::move(v), hbar_};
}

MultiplicationSuperops multiplication_superops(const ComplexMatrix& a) {
  require_square_finite(a, "multiplication operand");
  const Eigen::Index n = a.rows();
  const ComplexMatrix id = ComplexMatrix::Identity(n, n);
  return {SuperOperator(n, kron(id, a)), SuperOperator(n, kron(a.transpose(), id))};
}

namespace {

// L^-_X = (1/(i hbar)) (L_X - R_X)
ComplexMatrix lie_left(const ComplexMatrix& x, double hbar) {
  const auto lr = multiplication_superops(x);
  return (lr.left.mat() - lr.right.mat()) / (kI * hbar);
}

}  // namespace

SuperOperator commutator_generator(const ComplexMatrix& h, double hbar) {
  require_square_finite(h, "Hamiltonian");
  require_hermitian(h, LindbladModel::kHermitianTol, "Hamiltonian");
  return {h.rows(), lie_left(h, hbar)};
}

SuperOperator dissipative_generator(std::span<const ComplexMatrix> ops, double hbar) {
  if (ops.empty()) throw ShapeMismatch("dissipative_generator needs at least one operator");
  const Eigen::Index n = ops.front().rows();
  ComplexMatrix acc = ComplexMatrix::Zero(n * n, n * n);
  for (const auto& v : ops) {
    const ComplexMatrix vd = v.adjoint();
    const auto left_vd = multiplication_superops(vd).left.mat();
    const auto right_v = multiplication_superops(v).right.mat();
    // The second term applies L^-_{V^dag} first and R_V after it: with the
    // opposite order L_V(I) != 0 and the result disagrees with the
    // commutator form V^dag [A, V] + [V^dag, A] V.
    acc += left_vd * lie_left(v, hbar) - right_v * lie_left(vd, hbar);
  }
  return {n, 0.5 * kI * acc};
}

SuperOperator lindblad_generator(const LindbladModel& model) {
  SuperOperator out = commutator_generator(model.hamiltonian(), model.hbar());
  if (model.lindblad_ops().empty()) return out;
  return out + dissipative_generator(model.lindblad_ops(), model.hbar());
}

SuperOperator adjoint_generator(const SuperOperator& l) {
  // The matrix units |i><j| are orthonormal for (A|B) = Tr[A^dag B] and are
  // exactly the column-stacking coordinates, so the adjoint is the conjugate transpose.
  return {l.dim(), l.mat().adjoint()};
}

SuperOperator density_generator(const LindbladModel& model) {
  const Eigen::Index n = model.dim();
  const double hbar = model.hbar();
  const ComplexMatrix id = ComplexMatrix::Identity(n, n);
  const ComplexMatrix& h = model.hamiltonian();
  // -(1/(i hbar)) [H, rho]
  ComplexMatrix acc = -(kron(id, h) - kron(h.transpose(), id)) / (kI * hbar);
  for (const auto& v : model.lindblad_ops()) {
    const ComplexMatrix vdv = v.adjoint() * v;
    // V rho V^dag -> conj(V) kron V
    acc -= (kron(v.conjugate(), v) - 0.5 * kron(id, vdv) - 0.5 * kron(vdv.transpose(), id)) / hbar;
  }
  return {n, acc};
}

SuperOperator interaction_generator(const LindbladModel& model, double t) {
  if (model.lindblad_ops().empty()) return SuperOperator::zero(model.dim());
  const ComplexMatrix u = matrix_exp(model.hamiltonian() / (kI * model.hbar()), t);
  std::vector<ComplexMatrix> w;
  w.reserve(model.lindblad_ops().size());
  for (const auto& v : model.lindblad_ops()) w.push_back(u * v * u.adjoint());
  return dissipative_generator(w, model.hbar());
}

SuperOperator semigroup_map(const SuperOperator& l, double t) {
  if (!(t >= 0.0)) throw DomainError("semigroup time must be nonnegative");
  return {l.dim(), matrix_exp(-l.mat(), t)};
}

ComplexMatrix choi_matrix(const SuperOperator& e) {
  const Eigen::Index n = e.dim();
  ComplexMatrix j(n * n, n * n);
  // J[(i,k),(j,l)] = E(|i><j|)[k,l] = S[l*n + k, j*n + i]
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index jj = 0; jj < n; ++jj)
      for (Eigen::Index k = 0; k < n; ++k)
        for (Eigen::Index l = 0; l < n; ++l) j(i * n + k, jj * n + l) = e.mat()(l * n + k, jj * n + i);
  return j;
}

OperationReport check_quantum_operation(const SuperOperator& e, const OperationTolerances& tol) {
  const Eigen::Index n = e.dim();
  OperationReport rep;

  double real_res = 0.0;
  double trace_res = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const ComplexMatrix eij = e.apply(unit(n, i, j));
      const ComplexMatrix eji = e.apply(unit(n, j, i));
      real_res = std::max(real_res, (eij.adjoint() - eji).norm());
      const cplx expected = i == j ? 1.0 : 0.0;
      trace_res = std::max(trace_res, std::abs(eij.trace() - expected));
    }
  }
  rep.is_real = {real_res <= tol.real_tol, real_res};
  rep.is_trace_preserving = {trace_res <= tol.trace_tol, trace_res};

  const ComplexMatrix id = ComplexMatrix::Identity(n, n);
  const double unital_res =
      (adjoint_generator(e).apply(id) - id).norm() / std::sqrt(static_cast<double>(n));
  rep.is_unital = {unital_res <= tol.unital_tol, unital_res};

  const ComplexMatrix j = choi_matrix(e);
  const ComplexMatrix jh = 0.5 * (j + j.adjoint());
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(jh, Eigen::EigenvaluesOnly);
  rep.choi_min_eig = es.eigenvalues().minCoeff();
  const bool choi_hermitian = (j - j.adjoint()).norm() <= tol.real_tol * std::max(1.0, j.norm());
  rep.is_completely_positive = choi_hermitian && rep.choi_min_eig >= -tol.cp_tol;
  return rep;
}

double hermiticity_preservation_residual(const SuperOperator& e) {
  const Eigen::Index n = e.dim();
  const double r2 = 1.0 / std::sqrt(2.0);
  double worst = 0.0;
  auto probe = [&](const ComplexMatrix& b) {
    const ComplexMatrix y = e.apply(b);
    worst = std::max(worst, (y - y.adjoint()).norm() / std::max(1.0, y.norm()));
  };
  for (Eigen::Index i = 0; i < n; ++i) {
    probe(unit(n, i, i));
    for (Eigen::Index j = i + 1; j < n; ++j) {
      probe(r2 * (unit(n, i, j) + unit(n, j, i)));
      probe(r2 * kI * (unit(n, i, j) - unit(n, j, i)));
    }
  }
  return worst;
}

double duality_residual(const SuperOperator& e, const SuperOperator& phi) {
  require_same_dim(e, phi);
  // Tr[(E(E_ab))^dag E_cd] = conj(E_mat(cd, ab)) and Tr[E_ab^dag Phi(E_cd)] = Phi_mat(ab, cd).
  const double scale = std::max({1.0, e.mat().cwiseAbs().maxCoeff(), phi.mat().cwiseAbs().maxCoeff()});
  return (e.mat().adjoint() - phi.mat()).cwiseAbs().maxCoeff() / scale;
}

KrausResult kraus_apply(std::span<const ComplexMatrix> kraus, const ComplexMatrix& rho) {
  require_square_finite(rho, "density operator");
  const Eigen::Index n = rho.rows();
  KrausResult out{ComplexMatrix::Zero(n, n), 0.0};
  ComplexMatrix completeness = ComplexMatrix::Zero(n, n);
  for (const auto& a : kraus) {
    if (a.rows() != n || a.cols() != n) throw ShapeMismatch("Kraus operator size differs from rho");
    out.rho += a * rho * a.adjoint();
    completeness += a.adjoint() * a;
  }
  out.completeness_residual = (completeness - ComplexMatrix::Identity(n, n)).norm();
  return out;
}

SuperOperator kraus_superoperator(std::span<const ComplexMatrix> kraus) {
  if (kraus.empty()) throw ShapeMismatch("empty Kraus set");
  const Eigen::Index n = kraus.front().rows();
  ComplexMatrix acc = ComplexMatrix::Zero(n * n, n * n);
  for (const auto& a : kraus) acc += kron(a.conjugate(), a);
  return {n, acc};
}

}  // namespace fraclind
