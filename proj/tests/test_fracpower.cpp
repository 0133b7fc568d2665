#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "fraclind/errors.hpp"
#include "fraclind/fracpower.hpp"
#include "fraclind/oscillator.hpp"
#include "helpers.hpp"

using namespace fraclind;
namespace ft = fraclind::testing;

namespace {

double rel(const ComplexMatrix& a, const ComplexMatrix& b) {
  return frobenius(a - b) / std::max(1e-300, frobenius(b));
}

SuperOperator scalar(double c) { return {1, ComplexMatrix::Constant(1, 1, c)}; }

SuperOperator diag(std::initializer_list<double> d) {
  ComplexMatrix m = ComplexMatrix::Zero(d.size(), d.size());
  int i = 0;
  for (double v : d) m(i, i) = v, ++i;
  // A diagonal "superoperator" on an sqrt(n)-dimensional space only needs n to be a square.
  const auto dim = static_cast<Eigen::Index>(std::lround(std::sqrt(static_cast<double>(d.size()))));
  return {dim, m};
}

/// V diag(lambda) V^-1 with Re lambda in [0.1, 3] and a well-conditioned V.
SuperOperator random_sector_matrix(int n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> re(0.1, 3.0), im(-3.0, 3.0);
  ComplexMatrix d = ComplexMatrix::Zero(n, n);
  for (int i = 0; i < n; ++i) d(i, i) = cplx(re(rng), im(rng));
  const ComplexMatrix v = ComplexMatrix::Identity(n, n) + 0.2 * ft::random_matrix(n, rng) / std::sqrt(n);
  const auto dim = static_cast<Eigen::Index>(std::lround(std::sqrt(static_cast<double>(n))));
  return {dim, v * d * v.inverse()};
}

FractionalMethod method(MethodTag tag) {
  FractionalMethod m;
  m.tag = tag;
  return m;
}

}  // namespace

TEST(Methods, Names) {
  EXPECT_EQ(method_from_string("spectral"), MethodTag::spectral);
  EXPECT_EQ(method_from_string("balakrishnan"), MethodTag::balakrishnan);
  EXPECT_EQ(method_from_string("subordination"), MethodTag::subordination);
  EXPECT_EQ(to_string(MethodTag::subordination), "subordination");
  EXPECT_THROW(method_from_string("pade"), ConfigError);
}

TEST(SpectralPower, Examples) {
  EXPECT_LE(rel(spectral_power(diag({1.0, 4.0, 9.0, 16.0}), 0.5).mat(), diag({1.0, 2.0, 3.0, 4.0}).mat()), 1e-15);
  std::mt19937_64 rng(1);
  const SuperOperator l = random_sector_matrix(16, rng);
  EXPECT_EQ(spectral_power(l, 1.0).mat(), l.mat());
  const ComplexMatrix lhs = spectral_power(l, 0.3).mat() * spectral_power(l, 0.4).mat();
  EXPECT_LE(rel(lhs, spectral_power(l, 0.7).mat()), 1e-9);
}

TEST(SpectralPower, PrincipalBranchOnOscillatorEigenvalue) {
  // The free-oscillator Liouvillian has eigenvalue i omega (omega = level spacing).
  const SuperOperator l = lindblad_generator(free_oscillator_model(4, OscParams{}));
  const SuperOperator p = spectral_power(l, 0.5);
  const EigDecomposition e = eig_decompose(l.mat());
  const cplx expect = std::exp(cplx(0.0, std::numbers::pi / 4));
  bool found = false;
  for (Eigen::Index k = 0; k < e.values.size(); ++k) {
    if (std::abs(e.values(k) - cplx(0.0, 1.0)) > 1e-9) continue;
    const ComplexVector v = e.vectors.col(k);
    EXPECT_LE((p.mat() * v - expect * v).norm(), 1e-10 * v.norm());
    found = true;
  }
  EXPECT_TRUE(found);
}

TEST(SpectralPower, KernelStaysFixed) {
  const SuperOperator l = lindblad_generator(ft::amplitude_damping());
  const SuperOperator p = spectral_power(l, 0.4);
  EXPECT_LE(frobenius(p.apply(ComplexMatrix::Identity(2, 2))), 1e-12);
}

TEST(SpectralPower, Errors) {
  EXPECT_THROW(spectral_power(diag({-1.0, 1.0, 2.0, 3.0}), 0.5), SpectrumOutsideSector);
  ComplexMatrix j = ComplexMatrix::Zero(4, 4);
  j(0, 0) = j(1, 1) = 1.0;
  j(0, 1) = 1.0;
  j(2, 2) = j(3, 3) = 2.0;
  EXPECT_THROW(spectral_power(SuperOperator(2, j), 0.5), NonDiagonalizable);
  EXPECT_THROW(require_sector(diag({-1e-3, 1.0, 1.0, 1.0})), SpectrumOutsideSector);
  EXPECT_NO_THROW(require_sector(diag({-1e-12, 1.0, 1.0, 1.0})));
}

TEST(BalakrishnanPower, Examples) {
  EXPECT_NEAR(std::abs(balakrishnan_power(scalar(2.0), 0.5).mat()(0, 0) - std::sqrt(2.0)), 0.0, 1e-5);
  EXPECT_NEAR(std::sqrt(2.0), 1.414214, 5e-7);
  for (double alpha : {0.2, 0.5, 0.8})
    EXPECT_LE(rel(balakrishnan_power(SuperOperator::identity(2), alpha).mat(), ComplexMatrix::Identity(4, 4)),
              1e-6);
  std::mt19937_64 rng(2);
  const SuperOperator l = lindblad_generator(ft::random_model(4, 2, rng));
  const SuperOperator s = spectral_power(l, 0.5);
  EXPECT_LE(rel(balakrishnan_power(l, 0.5).mat(), s.mat()), 1e-5);
}

TEST(BalakrishnanPower, CoversDefectiveGenerators) {
  // Jordan block at 1: J^alpha = [[1, alpha], [0, 1]].
  ComplexMatrix j = ComplexMatrix::Identity(4, 4);
  j(0, 1) = 1.0;
  ComplexMatrix expect = ComplexMatrix::Identity(4, 4);
  expect(0, 1) = 0.5;
  EXPECT_LE(rel(balakrishnan_power(SuperOperator(2, j), 0.5).mat(), expect), 1e-5);
  EXPECT_LE(rel(fractional_power(SuperOperator(2, j), 0.5).mat(), expect), 1e-5);
}

TEST(KatoResolvent, Examples) {
  EXPECT_NEAR(std::abs(kato_resolvent(scalar(1.0), 0.5, 1.0).mat()(0, 0) - 0.5), 0.0, 1e-6);
  const ComplexMatrix k = kato_resolvent(diag({1.0, 4.0, 1.0, 4.0}), 0.5, 2.0).mat();
  EXPECT_LE(frobenius(k - diag({1.0 / 3, 0.25, 1.0 / 3, 0.25}).mat()), 1e-6);
}

TEST(KatoResolvent, BoundMatchesDirectRoute) {
  const SuperOperator l = lindblad_generator(ft::amplitude_damping());
  const SuperOperator la = spectral_power(l, 0.5);
  const int n2 = 4;
  for (double z : {0.1, 1.0, 10.0}) {
    const ComplexMatrix direct =
        linear_solve(z * ComplexMatrix::Identity(n2, n2) + la.mat(), ComplexMatrix::Identity(n2, n2));
    const ComplexMatrix kato = kato_resolvent(l, 0.5, z).mat();
    EXPECT_LE(rel(kato, direct), 1e-6) << z;
    // ||z R|| is bounded by the constant measured on the direct route.
    const double m_direct = (z * direct).operatorNorm();
    EXPECT_LE((z * kato).operatorNorm(), m_direct * (1.0 + 1e-6)) << z;
  }
}

TEST(SubordinatedMap, ScalarGenerator) {
  const SuperOperator l = scalar(1.0);
  const SuperOperator phi = fractional_semigroup(l, 0.5, 1.0, method(MethodTag::subordination));
  EXPECT_NEAR(std::abs(phi.mat()(0, 0) - std::exp(-1.0)), 0.0, 1e-5);
  EXPECT_NEAR(std::exp(-1.0), 0.367879, 5e-7);
}

TEST(SubordinatedMap, ZeroGeneratorIsIdentity) {
  const SuperOperator l = SuperOperator::zero(2);
  for (double alpha : {0.3, 0.7})
    for (double t : {0.5, 2.0}) {
      SubordinatorSpec s;
      s.alpha = alpha;
      const QuadratureRule r = quadrature_rule(s, t);
      EXPECT_LE(rel(subordinated_map(l, alpha, t, r).mat(), ComplexMatrix::Identity(4, 4)), 1e-6);
    }
}

TEST(SubordinatedMap, QubitMatchesSpectral) {
  const SuperOperator l = lindblad_generator(ft::amplitude_damping());
  const SuperOperator sub = fractional_semigroup(l, 0.5, 1.0, method(MethodTag::subordination));
  const SuperOperator spec = fractional_semigroup(l, 0.5, 1.0, method(MethodTag::spectral));
  EXPECT_LE(frobenius(sub.mat() - spec.mat()), 1e-4);
  EXPECT_LE(rel(spec.mat(), matrix_exp(-spectral_power(l, 0.5).mat(), 1.0)), 1e-14);
}

TEST(SubordinatedMap, RejectsMismatchedRule) {
  const SuperOperator l = lindblad_generator(ft::amplitude_damping());
  SubordinatorSpec s;
  s.alpha = 0.5;
  const QuadratureRule r = quadrature_rule(s, 1.0);
  EXPECT_THROW(subordinated_map(l, 0.5, 2.0, r), DomainError);
  EXPECT_THROW(subordinated_map(l, 0.6, 1.0, r), DomainError);
  EXPECT_THROW(subordinated_map(scalar(-1.0), 0.5, 1.0, r), SpectrumOutsideSector);
}

TEST(FractionalSemigroup, Limits) {
  std::mt19937_64 rng(3);
  const SuperOperator l = lindblad_generator(ft::random_model(3, 2, rng));
  for (MethodTag tag : {MethodTag::spectral, MethodTag::balakrishnan, MethodTag::subordination}) {
    EXPECT_EQ(fractional_semigroup(l, 0.5, 0.0, method(tag)).mat(), ComplexMatrix::Identity(9, 9));
    EXPECT_LE(rel(fractional_semigroup(l, 1.0, 0.7, method(tag)).mat(), semigroup_map(l, 0.7).mat()), 1e-14);
  }
}

TEST(FractionalSemigroup, SemigroupProperty) {
  std::mt19937_64 rng(4);
  const SuperOperator l = lindblad_generator(ft::random_model(3, 2, rng));
  for (double alpha : {0.3, 0.5, 0.7})
    for (double t : {0.2, 0.5})
      for (double s : {0.2, 0.5}) {
        const auto f = [&](double x) { return fractional_semigroup(l, alpha, x, method(MethodTag::spectral)); };
        EXPECT_LE(frobenius((f(t) * f(s)).mat() - f(t + s).mat()), 1e-8) << alpha << " " << t << " " << s;
      }
}

TEST(FractionalSemigroup, ContinuityAsAlphaApproachesOne) {
  const SuperOperator l = lindblad_generator(damped_oscillator_model(6, ft::damped_example()));
  const ComplexMatrix phi = semigroup_map(l, 1.0).mat();
  double prev = std::numeric_limits<double>::infinity();
  for (double alpha : {0.9, 0.99, 0.999}) {
    const double d = frobenius(fractional_semigroup(l, alpha, 1.0).mat() - phi);
    EXPECT_LT(d, prev) << alpha;
    prev = d;
  }
}

TEST(EvolveObservable, Examples) {
  const SuperOperator l = lindblad_generator(ft::amplitude_damping());
  const std::vector<double> times{0.0, 0.5, 1.0, 2.0};
  const TimeSeries one = evolve_observable(l, 1.0, ft::sigma_z(), times);
  for (std::size_t i = 0; i < times.size(); ++i)
    EXPECT_LE(frobenius(one.values[i] - semigroup_map(l, times[i]).apply(ft::sigma_z())), 1e-14);
  EXPECT_EQ(one.values[0], ft::sigma_z());
  for (MethodTag tag : {MethodTag::spectral, MethodTag::subordination}) {
    const TimeSeries id = evolve_observable(l, 0.5, ComplexMatrix::Identity(2, 2), times, method(tag));
    for (const auto& v : id.values) EXPECT_LE(frobenius(v - ComplexMatrix::Identity(2, 2)), 1e-9);
    const TimeSeries sz = evolve_observable(l, 0.5, ft::sigma_z(), times, method(tag));
    for (const auto& v : sz.values) EXPECT_LE(hermiticity_residual(v), 1e-8);
  }
}

TEST(EvolveObservable, FreeOscillatorMatchesCoefficients) {
  const OscParams pr;
  const int n = 24;
  const SuperOperator l = lindblad_generator(free_oscillator_model(n, pr));
  const FockOperators f = fock_operators(n, pr);
  const ComplexMatrix rho = coherent_state(n, cplx(1.0, 0.5));
  const std::vector<double> times{0.5, 1.0, 2.0};
  const TimeSeries q = evolve_observable(l, 0.5, f.q, times);
  const double q0 = (rho * f.q).trace().real(), p0 = (rho * f.p).trace().real();
  for (std::size_t i = 0; i < times.size(); ++i) {
    const FracCoeffs k = frac_osc_coeffs(0.5, times[i], pr);
    EXPECT_NEAR((rho * q.values[i]).trace().real(), q0 * k.c + p0 * k.s, 1e-5) << times[i];
  }
}

TEST(EvolveDensity, Examples) {
  const LindbladModel qubit = ft::amplitude_damping();
  const SuperOperator lam = density_generator(qubit);
  const std::vector<double> times{0.0, 0.5, 1.0};
  ComplexMatrix excited = ComplexMatrix::Zero(2, 2);
  excited(1, 1) = 1.0;
  for (MethodTag tag : {MethodTag::spectral, MethodTag::subordination}) {
    const TimeSeries r = evolve_density(lam, 0.5, excited, times, method(tag));
    for (const auto& rho : r.values) {
      EXPECT_NEAR(std::abs(rho.trace() - 1.0), 0.0, 1e-8);
      EXPECT_GE(min_hermitian_eigenvalue(rho), -1e-7);
    }
  }

  // Unital channel: dephasing keeps the maximally mixed state fixed.
  const LindbladModel dephasing(ComplexMatrix::Zero(2, 2), {ft::sigma_z()});
  const ComplexMatrix mixed = ComplexMatrix::Identity(2, 2) / 2.0;
  const TimeSeries m = evolve_density(density_generator(dephasing), 0.6, mixed, times);
  for (const auto& rho : m.values) EXPECT_LE(frobenius(rho - mixed), 1e-12);

  // von Neumann: spectrum of rho_t constant.
  std::mt19937_64 rng(5);
  const LindbladModel closed(ft::random_hermitian(3, rng), {});
  ComplexMatrix rho0 = ft::random_matrix(3, rng);
  rho0 = rho0 * rho0.adjoint();
  rho0 /= rho0.trace();
  const TimeSeries vn = evolve_density(density_generator(closed), 1.0, rho0, {0.0, 0.7, 3.0});
  const Eigen::VectorXd e0 = Eigen::SelfAdjointEigenSolver<ComplexMatrix>(rho0).eigenvalues();
  for (const auto& rho : vn.values) {
    const Eigen::VectorXd e = Eigen::SelfAdjointEigenSolver<ComplexMatrix>(0.5 * (rho + rho.adjoint())).eigenvalues();
    EXPECT_LE((e - e0).norm(), 1e-10);
  }
}

TEST(EvolveDensity, RejectsInvalidStates) {
  const SuperOperator lam = density_generator(ft::amplitude_damping());
  ComplexMatrix bad_trace = ComplexMatrix::Identity(2, 2);
  EXPECT_THROW(evolve_density(lam, 0.5, bad_trace, {1.0}), InvalidState);
  ComplexMatrix negative = ComplexMatrix::Zero(2, 2);
  negative(0, 0) = 1.5;
  negative(1, 1) = -0.5;
  EXPECT_THROW(evolve_density(lam, 0.5, negative, {1.0}), InvalidState);
  ComplexMatrix not_hermitian = ComplexMatrix::Identity(2, 2) / 2.0;
  not_hermitian(0, 1) = 0.3;
  EXPECT_THROW(evolve_density(lam, 0.5, not_hermitian, {1.0}), InvalidState);
}
