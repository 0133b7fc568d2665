#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "fraclind/matrix_engine.hpp"

namespace fraclind {

/// Superoperators act on column-stacked operators: entry (i, j) of an N x N
/// operator sits at position j*N + i. Under this convention
///   vec(A X B) = (B^T kron A) vec(X).
inline constexpr std::string_view kVectorization = "column-stacking";

ComplexVector vectorize(const ComplexMatrix& a);
/// Inverse of vectorize; throws LengthMismatch unless the length is a perfect square.
ComplexMatrix unvectorize(const ComplexVector& v);

/// An N^2 x N^2 matrix acting on vectorized N x N operators.
class SuperOperator {
 public:
  SuperOperator(Eigen::Index dim, ComplexMatrix mat);

  static SuperOperator identity(Eigen::Index dim);
  static SuperOperator zero(Eigen::Index dim);

  Eigen::Index dim() const noexcept { return dim_; }
  const ComplexMatrix& mat() const noexcept { return mat_; }
  static constexpr std::string_view convention() noexcept { return kVectorization; }

  ComplexMatrix apply(const ComplexMatrix& x) const;
  SuperOperator operator*(const SuperOperator& other) const;
  SuperOperator operator+(const SuperOperator& other) const;
  SuperOperator operator-(const SuperOperator& other) const;
  SuperOperator scaled(cplx factor) const;

 private:
  Eigen::Index dim_;
  ComplexMatrix mat_;
};

/// H and Lindblad operators {V_k} on an N-dimensional space.
class LindbladModel {
 public:
  LindbladModel(ComplexMatrix h, std::vector<ComplexMatrix> v, double hbar = 1.0);

  Eigen::Index dim() const noexcept { return h_.rows(); }
  const ComplexMatrix& hamiltonian() const noexcept { return h_; }
  const std::vector<ComplexMatrix>& lindblad_ops() const noexcept { return v_; }
  double hbar() const noexcept { return hbar_; }

  LindbladModel with_hamiltonian(ComplexMatrix h) const;
  LindbladModel with_lindblad_ops(std::vector<ComplexMatrix> v) const;

  /// Relative anti-Hermitian part tolerated in H.
  static constexpr double kHermitianTol = 1e-10;

 private:
  ComplexMatrix h_;
  std::vector<ComplexMatrix> v_;
  double hbar_;
};

struct MultiplicationSuperops {
  SuperOperator left;   ///< X -> A X  (I kron A)
  SuperOperator right;  ///< X -> X A  (A^T kron I)
};

MultiplicationSuperops multiplication_superops(const ComplexMatrix& a);

/// (1/(i hbar)) [H, .]
SuperOperator commutator_generator(const ComplexMatrix& h, double hbar = 1.0);

/// Markovian superoperator L_V of the observable equation dA/dt = -L_V A:
///   L_V A = L^-_H A + (i/2) sum_k (V_k^dag (L^-_{V_k} A) - (L^-_{V_k^dag} A) V_k),
/// with L^-_X = (1/(i hbar)) (L_X - R_X); equivalently
///   -L_V A = -(1/(i hbar)) [H, A] + (1/(2 hbar)) sum_k (V_k^dag [A, V_k] + [V_k^dag, A] V_k).
/// Its spectrum lies in Re >= 0 and L_V(I) = 0.
SuperOperator lindblad_generator(const LindbladModel& model);

/// Non-Hamiltonian part of lindblad_generator, built from an arbitrary list of operators.
SuperOperator dissipative_generator(std::span<const ComplexMatrix> ops, double hbar);

/// Hilbert-Schmidt adjoint: Tr[(Lambda A)^dag B] = Tr[A^dag L(B)].
SuperOperator adjoint_generator(const SuperOperator& l);

/// Generator of the density-operator equation d rho/dt = -Lambda_V rho, assembled
/// directly from its operator form,
///   Lambda_V rho = -(1/(i hbar)) [H, rho] - (1/hbar) sum_k (V rho V^dag - {V^dag V, rho}/2).
/// Coincides with adjoint_generator(lindblad_generator(model)).
SuperOperator density_generator(const LindbladModel& model);

/// Interaction-picture generator built from W_k(t) = U(t) V_k U(t)^dag,
/// U(t) = exp(H t / (i hbar)). Only the dissipative part is retained.
SuperOperator interaction_generator(const LindbladModel& model, double t);

/// Phi_t = exp(-t L), t >= 0.
SuperOperator semigroup_map(const SuperOperator& l, double t);

/// Choi matrix J = sum_ij |i><j| kron E(|i><j|) for a map acting on density operators.
ComplexMatrix choi_matrix(const SuperOperator& e);

struct CheckResult {
  bool pass = false;
  double residual = 0.0;
};

struct OperationTolerances {
  double real_tol = 1e-8;
  double trace_tol = 1e-8;
  double unital_tol = 1e-8;
  double cp_tol = 1e-8;
};

struct OperationReport {
  CheckResult is_real;
  CheckResult is_trace_preserving;
  CheckResult is_unital;
  double choi_min_eig = 0.0;
  bool is_completely_positive = false;

  bool is_quantum_operation() const {
    return is_real.pass && is_trace_preserving.pass && is_unital.pass && is_completely_positive;
  }
};

/// Verifies the quantum-operation conditions for a map E on density operators.
///  - reality: (E(A))^dag = E(A^dag) on the matrix-unit basis
///  - trace preservation: Tr E(rho) = Tr rho, checked on the basis directly
///  - unitality of the adjoint: E^dag(I) = I, checked through the adjoint matrix
///  - complete positivity: Choi matrix positive semidefinite within cp_tol
OperationReport check_quantum_operation(const SuperOperator& e,
                                        const OperationTolerances& tol = {});

/// Largest relative hermiticity defect max_k ||E(B_k) - E(B_k)^dag||_F over a
/// Hermitian basis {B_k} (diagonal units plus symmetric/antisymmetric pairs).
double hermiticity_preservation_residual(const SuperOperator& e);

/// Relative Hilbert-Schmidt duality residual max |Tr[(E A)^dag B] - Tr[A^dag Phi(B)]|
/// over the matrix-unit basis, normalized by max(||E||, ||Phi||).
double duality_residual(const SuperOperator& e, const SuperOperator& phi);

struct KrausResult {
  ComplexMatrix rho;
  double completeness_residual = 0.0;  ///< ||sum A_k^dag A_k - I||_F
};

KrausResult kraus_apply(std::span<const ComplexMatrix> kraus, const ComplexMatrix& rho);
/// The superoperator rho -> sum_k A_k rho A_k^dag.
SuperOperator kraus_superoperator(std::span<const ComplexMatrix> kraus);

}  // namespace fraclind
