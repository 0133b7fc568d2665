#pragma once

// Shared fixtures for the test suites: small models and independent
// reference constructions.

#include <random>
#include <vector>

#include "fraclind/liouville.hpp"
#include "fraclind/oscillator.hpp"

namespace fraclind::testing {

inline ComplexMatrix sigma_minus() {
  ComplexMatrix s = ComplexMatrix::Zero(2, 2);
  s(0, 1) = 1.0;  // |0><1|
  return s;
}

inline ComplexMatrix sigma_z() {
  ComplexMatrix s = ComplexMatrix::Zero(2, 2);
  s(0, 0) = 1.0;
  s(1, 1) = -1.0;
  return s;
}

/// H = 0, V = sqrt(gamma) sigma_-.
inline LindbladModel amplitude_damping(double gamma = 1.0) {
  return LindbladModel(ComplexMatrix::Zero(2, 2), {std::sqrt(gamma) * sigma_minus()});
}

inline ComplexMatrix random_matrix(int n, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, 1.0);
  ComplexMatrix m(n, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) m(i, j) = scale * cplx(g(rng), g(rng));
  return m;
}

inline ComplexMatrix random_hermitian(int n, std::mt19937_64& rng, double scale = 1.0) {
  const ComplexMatrix m = random_matrix(n, rng, scale);
  return 0.5 * (m + m.adjoint());
}

inline LindbladModel random_model(int n, int k, std::mt19937_64& rng, double scale = 0.5) {
  std::vector<ComplexMatrix> v;
  for (int i = 0; i < k; ++i) v.push_back(random_matrix(n, rng, scale));
  return LindbladModel(random_hermitian(n, rng, scale), v);
}

/// Worked damped example: m = omega = 1, mu = 0, a_1 = i sqrt(0.1), b_1 = sqrt(0.1).
inline DampedOscParams damped_example(double mu = 0.0) {
  const double c = std::sqrt(0.1);
  return damped_params(1.0, 1.0, mu, {{cplx(0.0, c), cplx(c, 0.0)}});
}

inline ComplexMatrix matrix_unit(int n, int i, int j) {
  ComplexMatrix e = ComplexMatrix::Zero(n, n);
  e(i, j) = 1.0;
  return e;
}

/// Column-by-column assembly of A -> -(1/(i hbar))[H, A] + (1/2hbar) sum (V^dag [A, V] + [V^dag, A] V),
/// negated so that it is L_V. Independent of the Kronecker construction.
inline ComplexMatrix brute_force_generator(const LindbladModel& model) {
  const int n = static_cast<int>(model.dim());
  const cplx ih(0.0, model.hbar());
  const ComplexMatrix& h = model.hamiltonian();
  ComplexMatrix out(n * n, n * n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const ComplexMatrix a = matrix_unit(n, i, j);
      ComplexMatrix rate = -(h * a - a * h) / ih;
      for (const auto& v : model.lindblad_ops()) {
        const ComplexMatrix vd = v.adjoint();
        rate += (vd * (a * v - v * a) + (vd * a - a * vd) * v) / (2.0 * model.hbar());
      }
      const ComplexMatrix l = -rate;
      for (int c = 0; c < n; ++c)
        for (int r = 0; r < n; ++r) out(c * n + r, j * n + i) = l(r, c);
    }
  return out;
}

/// Lambda rho = -(1/(i hbar))[H, rho] - (1/hbar) sum (V rho V^dag - {V^dag V, rho}/2),
/// d rho/dt = -Lambda rho, assembled column by column.
inline ComplexMatrix brute_force_density_generator(const LindbladModel& model) {
  const int n = static_cast<int>(model.dim());
  const cplx ih(0.0, model.hbar());
  const ComplexMatrix& h = model.hamiltonian();
  ComplexMatrix out(n * n, n * n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const ComplexMatrix rho = matrix_unit(n, i, j);
      ComplexMatrix lam = -(h * rho - rho * h) / ih;
      for (const auto& v : model.lindblad_ops()) {
        const ComplexMatrix vdv = v.adjoint() * v;
        lam -= (v * rho * v.adjoint() - 0.5 * (vdv * rho + rho * vdv)) / model.hbar();
      }
      for (int c = 0; c < n; ++c)
        for (int r = 0; r < n; ++r) out(c * n + r, j * n + i) = lam(r, c);
    }
  return out;
}

/// Choi matrix sum_ij |i><j| kron E(|i><j|), built with explicit block writes.
inline ComplexMatrix brute_force_choi(const SuperOperator& e) {
  const int n = static_cast<int>(e.dim());
  ComplexMatrix j = ComplexMatrix::Zero(n * n, n * n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      const ComplexMatrix img = e.apply(matrix_unit(n, a, b));
      j.block(a * n, b * n, n, n) = img;
    }
  return j;
}

}  // namespace fraclind::testing
