#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "fraclind/errors.hpp"
#include "fraclind/liouville.hpp"
#include "fraclind/oscillator.hpp"
#include "helpers.hpp"

using namespace fraclind;
namespace ft = fraclind::testing;

namespace {

ComplexMatrix sigma_plus_spec() {
  ComplexMatrix s = ComplexMatrix::Zero(2, 2);
  s(0, 1) = 1.0;
  return s;
}

double rel(const ComplexMatrix& a, const ComplexMatrix& b) {
  return frobenius(a - b) / std::max(1.0, frobenius(b));
}

std::vector<cplx> sorted_values(const ComplexMatrix& a) {
  Eigen::ComplexEigenSolver<ComplexMatrix> es(a);
  std::vector<cplx> v(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
  std::sort(v.begin(), v.end(), [](cplx x, cplx y) {
    return std::abs(x.real() - y.real()) > 1e-9 ? x.real() < y.real() : x.imag() < y.imag();
  });
  return v;
}

}  // namespace

TEST(Vectorize, ColumnStacking) {
  ComplexMatrix a(2, 2);
  a << 1.0, 2.0, 3.0, 4.0;
  const ComplexVector v = vectorize(a);
  ASSERT_EQ(v.size(), 4);
  EXPECT_EQ(v(0), cplx(1.0));
  EXPECT_EQ(v(1), cplx(3.0));
  EXPECT_EQ(v(2), cplx(2.0));
  EXPECT_EQ(v(3), cplx(4.0));
  EXPECT_EQ(vectorize(ComplexMatrix::Zero(3, 3)), ComplexVector::Zero(9));
  std::mt19937_64 rng(1);
  const ComplexMatrix r = ft::random_matrix(3, rng);
  EXPECT_EQ(unvectorize(vectorize(r)), r);
  EXPECT_THROW(unvectorize(ComplexVector::Zero(5)), LengthMismatch);
}

TEST(MultiplicationSuperops, Examples) {
  const auto id = multiplication_superops(ComplexMatrix::Identity(3, 3));
  EXPECT_EQ(id.left.mat(), ComplexMatrix::Identity(9, 9));
  EXPECT_EQ(id.right.mat(), ComplexMatrix::Identity(9, 9));
  std::mt19937_64 rng(4);
  const ComplexMatrix a = ft::random_matrix(3, rng), x = ft::random_matrix(3, rng);
  const auto m = multiplication_superops(a);
  EXPECT_LE(rel(m.left.apply(ComplexMatrix::Identity(3, 3)), a), 1e-15);
  EXPECT_LE(rel(m.left.apply(x), a * x), 1e-14);
  EXPECT_LE(rel(m.right.apply(x), x * a), 1e-14);
  const auto sp = multiplication_superops(sigma_plus_spec());
  ComplexMatrix expect = ComplexMatrix::Zero(2, 2);
  expect(0, 0) = 1.0;
  EXPECT_EQ(sp.left.apply(sigma_plus_spec().adjoint()), expect);
}

TEST(CommutatorGenerator, Examples) {
  EXPECT_LE(frobenius(commutator_generator(ComplexMatrix::Identity(2, 2)).mat()), 1e-15);
  ComplexMatrix h = ComplexMatrix::Zero(2, 2);
  h(0, 0) = 1.0;
  h(1, 1) = -1.0;
  const SuperOperator c = commutator_generator(h);
  EXPECT_LE(rel(c.apply(sigma_plus_spec()), cplx(0.0, -2.0) * sigma_plus_spec()), 1e-15);
  EXPECT_LE(frobenius(c.apply(h)), 1e-15);
  const auto ev = sorted_values(c.mat());
  const std::vector<cplx> expect{cplx(0, -2), cplx(0, 0), cplx(0, 0), cplx(0, 2)};
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(std::abs(ev[i] - expect[i]), 0.0, 1e-12);
  ComplexMatrix bad = h;
  bad(0, 1) = 1.0;
  EXPECT_THROW(commutator_generator(bad), NotHermitian);
}

TEST(LindbladGenerator, NoDissipatorIsCommutator) {
  std::mt19937_64 rng(6);
  const ComplexMatrix h = ft::random_hermitian(4, rng);
  const LindbladModel model(h, {}, 0.7);
  EXPECT_LE(rel(lindblad_generator(model).mat(), commutator_generator(h, 0.7).mat()), 1e-14);
}

TEST(LindbladGenerator, MatchesTermByTermAssembly) {
  std::mt19937_64 rng(7);
  for (int n : {2, 3, 5}) {
    const LindbladModel model = ft::random_model(n, 3, rng);
    const ComplexMatrix brute = ft::brute_force_generator(model);
    EXPECT_LE(rel(lindblad_generator(model).mat(), brute), 1e-13) << "n = " << n;
  }
}

TEST(LindbladGenerator, AmplitudeDampingSigmaZ) {
  const LindbladModel model = ft::amplitude_damping(1.0);
  const SuperOperator l = lindblad_generator(model);
  const ComplexMatrix brute = ft::brute_force_generator(model);
  const ComplexMatrix sz = ft::sigma_z();
  const ComplexMatrix fast = -l.apply(sz);
  const ComplexMatrix slow = -unvectorize(brute * vectorize(sz));
  EXPECT_LE(frobenius(fast - slow), 1e-14);
  // Decay towards |0>: d(sigma_z)/dt = -L(sigma_z) = gamma (I - sigma_z) = 2 gamma |1><1|.
  EXPECT_LE(frobenius(fast - (ComplexMatrix::Identity(2, 2) - sz)), 1e-14);
}

TEST(LindbladGenerator, DampedOscillatorClosesOnQP) {
  const DampedOscParams p = ft::damped_example(0.3);
  const int n = 16;
  const SuperOperator l = lindblad_generator(damped_oscillator_model(n, p));
  const FockOperators f = fock_operators(n, OscParams{p.m, p.omega, p.hbar});
  const ComplexMatrix lq = -l.apply(f.q);
  const ComplexMatrix lp = -l.apply(f.p);
  const ComplexMatrix eq = (p.mu - p.lambda) * f.q + (1.0 / p.m) * f.p;
  const ComplexMatrix ep = -p.m * p.omega * p.omega * f.q - (p.mu + p.lambda) * f.p;
  const int k = n - 2;  // away from the truncation edge
  EXPECT_LE(frobenius((lq - eq).topLeftCorner(k, k)), 1e-12);
  EXPECT_LE(frobenius((lp - ep).topLeftCorner(k, k)), 1e-12);
}

TEST(LindbladGenerator, UnitalOnRandomModels) {
  std::mt19937_64 rng(13);
  for (int n = 2; n <= 8; ++n) {
    const LindbladModel model = ft::random_model(n, 1 + n % 3, rng);
    const ComplexMatrix li = lindblad_generator(model).apply(ComplexMatrix::Identity(n, n));
    EXPECT_LE(frobenius(li), 1e-12) << "n = " << n;
  }
}

TEST(LindbladGenerator, GaugeInvariance) {
  std::mt19937_64 rng(14);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int trial = 0; trial < 4; ++trial) {
    const int n = 3 + trial % 2;
    const LindbladModel model = ft::random_model(n, 2, rng);
    const double hbar = model.hbar();
    std::vector<ComplexMatrix> shifted;
    ComplexMatrix h = model.hamiltonian();
    const ComplexMatrix id = ComplexMatrix::Identity(n, n);
    for (const auto& v : model.lindblad_ops()) {
      const cplx a(g(rng), g(rng));
      shifted.push_back(v + a * id);
      h += (std::conj(a) * v - a * v.adjoint()) / (cplx(0.0, 2.0 * hbar));
    }
    const LindbladModel gauged(0.5 * (h + h.adjoint()), shifted, hbar);
    EXPECT_LE(rel(lindblad_generator(gauged).mat(), lindblad_generator(model).mat()), 1e-10);
  }
}

TEST(AdjointGenerator, DualityOnRandomPairs) {
  std::mt19937_64 rng(15);
  const LindbladModel model = ft::random_model(3, 2, rng);
  const SuperOperator l = lindblad_generator(model);
  const SuperOperator lam = adjoint_generator(l);
  for (int k = 0; k < 50; ++k) {
    const ComplexMatrix a = ft::random_matrix(3, rng), b = ft::random_matrix(3, rng);
    const cplx lhs = (lam.apply(a).adjoint() * b).trace();
    const cplx rhs = (a.adjoint() * l.apply(b)).trace();
    EXPECT_LE(std::abs(lhs - rhs), 1e-10 * std::max(1.0, std::abs(lhs)));
  }
  EXPECT_EQ(adjoint_generator(SuperOperator::identity(3)).mat(), ComplexMatrix::Identity(9, 9));
}

TEST(AdjointGenerator, VonNeumannLimit) {
  std::mt19937_64 rng(16);
  const ComplexMatrix h = ft::random_hermitian(3, rng);
  const LindbladModel model(h, {});
  // Lambda = -(1/i hbar)[H, .], the sign-flipped observable generator.
  EXPECT_LE(rel(adjoint_generator(lindblad_generator(model)).mat(), -commutator_generator(h).mat()), 1e-14);
  EXPECT_LE(rel(density_generator(model).mat(), -commutator_generator(h).mat()), 1e-14);
}

TEST(DensityGenerator, TwoConstructionsAgree) {
  const LindbladModel qubit = ft::amplitude_damping();
  EXPECT_LE(frobenius(density_generator(qubit).mat() - adjoint_generator(lindblad_generator(qubit)).mat()),
            1e-12);
  std::mt19937_64 rng(18);
  const LindbladModel model = ft::random_model(4, 3, rng);
  EXPECT_LE(rel(density_generator(model).mat(), ft::brute_force_density_generator(model)), 1e-13);
  EXPECT_LE(rel(density_generator(model).mat(), adjoint_generator(lindblad_generator(model)).mat()), 1e-13);
}

TEST(InteractionGenerator, Examples) {
  std::mt19937_64 rng(19);
  const LindbladModel model = ft::random_model(3, 2, rng);
  const SuperOperator d0 = dissipative_generator(model.lindblad_ops(), model.hbar());
  EXPECT_LE(rel(interaction_generator(model, 0.0).mat(), d0.mat()), 1e-14);
  const LindbladModel no_h = model.with_hamiltonian(ComplexMatrix::Zero(3, 3));
  EXPECT_LE(rel(interaction_generator(no_h, 1.3).mat(), interaction_generator(no_h, 0.0).mat()), 1e-14);
  const auto e0 = sorted_values(interaction_generator(model, 0.0).mat());
  const auto e1 = sorted_values(interaction_generator(model, 1.0).mat());
  for (std::size_t i = 0; i < e0.size(); ++i) EXPECT_NEAR(std::abs(e0[i] - e1[i]), 0.0, 1e-9);
}

TEST(SemigroupMap, Examples) {
  std::mt19937_64 rng(20);
  const LindbladModel model = ft::random_model(3, 2, rng);
  const SuperOperator l = lindblad_generator(model);
  EXPECT_EQ(semigroup_map(l, 0.0).mat(), ComplexMatrix::Identity(9, 9));
  const SuperOperator lhs = semigroup_map(l, 0.3) * semigroup_map(l, 0.7);
  EXPECT_LE(rel(lhs.mat(), semigroup_map(l, 1.0).mat()), 1e-10);
  EXPECT_THROW(semigroup_map(l, -1.0), DomainError);
}

TEST(SemigroupMap, DampedRestrictionMatchesClosedForm) {
  const DampedOscParams p = ft::damped_example(0.2);
  const int n = 24;
  const SuperOperator l = lindblad_generator(damped_oscillator_model(n, p));
  const FockOperators f = fock_operators(n, OscParams{p.m, p.omega, p.hbar});
  const int k = 6;  // the truncation edge leaks into the top-left block, ~1e-9 there by t = 2
  for (double t : {0.5, 1.0, 2.0}) {
    const SuperOperator phi = semigroup_map(l, t);
    const Complex2 m = damped_phi(t, p);
    const ComplexMatrix qt = phi.apply(f.q), pt = phi.apply(f.p);
    EXPECT_LE(frobenius((qt - m(0, 0) * f.q - m(0, 1) * f.p).topLeftCorner(k, k)), 1e-8) << t;
    EXPECT_LE(frobenius((pt - m(1, 0) * f.q - m(1, 1) * f.p).topLeftCorner(k, k)), 1e-8) << t;
  }
}

TEST(Choi, MatchesBruteForce) {
  std::mt19937_64 rng(22);
  const SuperOperator e = semigroup_map(density_generator(ft::random_model(3, 2, rng)), 0.4);
  EXPECT_LE(rel(choi_matrix(e), ft::brute_force_choi(e)), 1e-14);
}

TEST(CheckQuantumOperation, Identity) {
  const OperationReport r = check_quantum_operation(SuperOperator::identity(3));
  EXPECT_TRUE(r.is_quantum_operation());
  EXPECT_NEAR(r.choi_min_eig, 0.0, 1e-14);
}

TEST(CheckQuantumOperation, AmplitudeDampingChannel) {
  const SuperOperator e = semigroup_map(density_generator(ft::amplitude_damping()), 0.5);
  const OperationReport r = check_quantum_operation(e);
  EXPECT_TRUE(r.is_completely_positive);
  EXPECT_TRUE(r.is_trace_preserving.pass);
  EXPECT_TRUE(r.is_real.pass);
  EXPECT_TRUE(r.is_unital.pass);
  const Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(ft::brute_force_choi(e));
  EXPECT_NEAR(es.eigenvalues().minCoeff(), r.choi_min_eig, 1e-12);
}

TEST(CheckQuantumOperation, TransposeIsNotCompletelyPositive) {
  ComplexMatrix t = ComplexMatrix::Zero(4, 4);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) t(i * 2 + j, j * 2 + i) = 1.0;
  const SuperOperator transpose(2, t);
  ComplexMatrix x(2, 2);
  x << 1.0, 2.0, 3.0, 4.0;
  ASSERT_EQ(transpose.apply(x), x.transpose());
  const OperationReport r = check_quantum_operation(transpose);
  EXPECT_TRUE(r.is_real.pass);
  EXPECT_TRUE(r.is_trace_preserving.pass);
  EXPECT_NEAR(r.choi_min_eig, -1.0, 1e-14);
  EXPECT_FALSE(r.is_completely_positive);
  EXPECT_FALSE(r.is_quantum_operation());
  // The Choi matrix of the transpose is the swap operator.
  ComplexMatrix swap = ComplexMatrix::Zero(4, 4);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) swap(i * 2 + j, j * 2 + i) = 1.0;
  EXPECT_EQ(ft::brute_force_choi(transpose), swap);
}

TEST(CheckQuantumOperation, DetectsNonTracePreserving) {
  const OperationReport r = check_quantum_operation(SuperOperator::identity(2).scaled(0.5));
  EXPECT_FALSE(r.is_trace_preserving.pass);
  EXPECT_FALSE(r.is_unital.pass);
  EXPECT_TRUE(r.is_completely_positive);
}

TEST(Residuals, HermiticityAndDuality) {
  std::mt19937_64 rng(23);
  const LindbladModel model = ft::random_model(3, 2, rng);
  const SuperOperator phi = semigroup_map(lindblad_generator(model), 0.6);
  const SuperOperator e = semigroup_map(density_generator(model), 0.6);
  EXPECT_LE(hermiticity_preservation_residual(phi), 1e-12);
  EXPECT_LE(duality_residual(e, phi), 1e-12);
  const SuperOperator not_real(3, ComplexMatrix::Identity(9, 9) * cplx(0.0, 1.0));
  EXPECT_GT(hermiticity_preservation_residual(not_real), 1.0);
}

TEST(Kraus, Examples) {
  const ComplexMatrix rho = ComplexMatrix::Identity(2, 2) / 2.0;
  const std::vector<ComplexMatrix> id{ComplexMatrix::Identity(2, 2)};
  const KrausResult r0 = kraus_apply(id, rho);
  EXPECT_EQ(r0.rho, rho);
  EXPECT_EQ(r0.completeness_residual, 0.0);

  const double p = 0.5;
  ComplexMatrix k0 = ComplexMatrix::Zero(2, 2);
  k0(0, 0) = 1.0;
  k0(1, 1) = std::sqrt(1.0 - p);
  const std::vector<ComplexMatrix> ad{k0, std::sqrt(p) * ft::sigma_minus()};
  ComplexMatrix excited = ComplexMatrix::Zero(2, 2);
  excited(1, 1) = 1.0;
  const KrausResult r1 = kraus_apply(ad, excited);
  EXPECT_LE(frobenius(r1.rho - ComplexMatrix::Identity(2, 2) / 2.0), 1e-15);
  EXPECT_LE(r1.completeness_residual, 1e-15);
  EXPECT_LE(rel(kraus_superoperator(ad).apply(excited), r1.rho), 1e-15);
}

TEST(Kraus, RandomIsometryPreservesTrace) {
  std::mt19937_64 rng(24);
  const int n = 3, k = 3;
  // Stack k blocks of a random isometry n -> k n obtained from QR.
  const Eigen::HouseholderQR<ComplexMatrix> qr(ft::random_matrix(n * k, rng));
  const ComplexMatrix q = ComplexMatrix(qr.householderQ()).leftCols(n);
  std::vector<ComplexMatrix> kraus;
  for (int i = 0; i < k; ++i) kraus.push_back(q.middleRows(i * n, n));
  ComplexMatrix rho = ft::random_matrix(n, rng);
  rho = rho * rho.adjoint();
  rho /= rho.trace();
  const KrausResult r = kraus_apply(kraus, rho);
  EXPECT_LE(r.completeness_residual, 1e-12);
  EXPECT_NEAR(std::abs(r.rho.trace() - 1.0), 0.0, 1e-12);
}
