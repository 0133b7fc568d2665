#pragma once

#include <complex>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "fraclind/liouville.hpp"
#include "fraclind/subordinator.hpp"

namespace fraclind {

using Real2 = Eigen::Matrix2d;
using Complex2 = Eigen::Matrix2cd;

struct OscParams {
  double m = 1.0;
  double omega = 1.0;
  double hbar = 1.0;

  /// Throws DomainError unless all three are positive and finite.
  void validate() const;
};

struct FockOperators {
  ComplexMatrix a;  ///< annihilation, a|n> = sqrt(n)|n-1>
  ComplexMatrix q;
  ComplexMatrix p;
};

/// Q = sqrt(hbar/2m omega)(a + a^dag), P = i sqrt(hbar m omega/2)(a^dag - a) on N levels.
FockOperators fock_operators(int n, const OscParams& params);

/// Maps (Q0, P0) to (Q_t, P_t) for the undamped oscillator.
Real2 classical_solution(double t, const OscParams& params);

/// C_alpha(t) = int f_alpha(t,s) cos(omega s) ds, S_alpha likewise with sin.
struct FracCoeffs {
  double c = 1.0;
  double s = 0.0;
  double alpha = 1.0;
  double t = 0.0;
};

/// By quadrature against the subordinator density (C + iS is its Laplace
/// integral at x = -i omega). alpha = 1 gives cos and sin exactly.
FracCoeffs frac_osc_coeffs(double alpha, double t, const OscParams& params, SubordinatorSpec spec = {});

/// Closed form C + iS = exp(-t (-i omega)^alpha) on the principal branch.
FracCoeffs frac_osc_oracle(double alpha, double t, const OscParams& params);

/// [[C, S/(m omega)], [-m omega S, C]].
Real2 frac_osc_solution(const FracCoeffs& k, const OscParams& params);
Real2 frac_osc_solution(double alpha, double t, const OscParams& params, const SubordinatorSpec& spec = {});

/// H = P^2/2m + m omega^2 Q^2/2 + (mu/2)(PQ + QP), V_k = a_k P + b_k Q.
struct DampedOscParams {
  double m = 1.0;
  double omega = 1.0;
  double mu = 0.0;
  double hbar = 1.0;
  std::vector<std::pair<cplx, cplx>> coeffs;  ///< (a_k, b_k)

  double lambda = 0.0;  ///< Im sum_k a_k conj(b_k)
  cplx nu = 0.0;        ///< principal sqrt(mu^2 - omega^2)
  Complex2 M;           ///< d/dt (Q, P) = M (Q, P)
  Complex2 N;
  Complex2 N_inv;
  Complex2 F;           ///< diag(-(lambda + nu), -(lambda - nu)), M = N_inv F N

  /// lambda recomputed from coeffs.
  double lambda_from_coeffs() const;
};

/// Throws DomainError on bad inputs and DegenerateNu when nu = 0 (mu = +/- omega).
DampedOscParams damped_params(double m, double omega, double mu, std::vector<std::pair<cplx, cplx>> coeffs,
                              double hbar = 1.0);

/// exp(M t) in closed form:
///   e^{-lambda t} [[cosh nu t + (mu/nu) sinh nu t, (1/m nu) sinh nu t],
///                  [-(m omega^2/nu) sinh nu t,      cosh nu t - (mu/nu) sinh nu t]].
Complex2 damped_phi(double t, const DampedOscParams& params);

/// Ch_alpha(t) = int f_alpha(t,s) e^{-lambda s} cosh(nu s) ds, Sh_alpha likewise with sinh.
struct FracDampedCoeffs {
  cplx ch = 1.0;
  cplx sh = 0.0;
  double alpha = 1.0;
  double t = 0.0;
};

/// Quadrature through the Laplace integrals at x = lambda -/+ nu.
/// Throws SectorViolation when Re(lambda +/- nu) < 0.
FracDampedCoeffs frac_damped_coeffs(double alpha, double t, const DampedOscParams& params,
                                    SubordinatorSpec spec = {});

/// Ch, Sh = (exp(-t (lambda - nu)^alpha) +/- exp(-t (lambda + nu)^alpha)) / 2.
FracDampedCoeffs frac_damped_oracle(double alpha, double t, const DampedOscParams& params);

/// alpha = 1/2 through the Macdonald function:
///   Ch, Sh = t/(2 sqrt pi) [V(lambda - nu) +/- V(lambda + nu)],
///   V(q) = (4q/t^2)^{1/4} K_{-1/2}(t sqrt q).
FracDampedCoeffs frac_damped_macdonald(double t, const DampedOscParams& params);

/// K_{-1/2}(z) = sqrt(pi/2z) e^{-z}, principal branch, Re z >= 0.
cplx macdonald_k_half(cplx z);

/// [[Ch + (mu/nu) Sh, Sh/(m nu)], [-(m omega^2/nu) Sh, Ch - (mu/nu) Sh]].
Complex2 frac_damped_solution(const FracDampedCoeffs& k, const DampedOscParams& params);
Complex2 frac_damped_solution(double alpha, double t, const DampedOscParams& params,
                              const SubordinatorSpec& spec = {});

struct GaussianState {
  double x0 = 0.0;
  double p0 = 0.0;
  double a = 1.0;  ///< width, |psi(x)|^2 ~ exp(-(x - x0)^2 / a^2)
};

struct GaussianMoments {
  double mean_q = 0.0;
  double mean_p = 0.0;
  double disp_q = 0.0;
  double disp_p = 0.0;
};

/// <Q> = x0 C + p0 S/(m omega), <P> = p0 C - m omega x0 S,
/// D(Q) = (a^2/2) C^2 + (hbar^2 / 2 a^2 m^2 omega^2) S^2,
/// D(P) = (hbar^2 / 2 a^2) C^2 + (a^2 m^2 omega^2 / 2) S^2.
GaussianMoments gaussian_moments(const FracCoeffs& k, const GaussianState& state, const OscParams& params);
/// t = 0 returns the initial moments.
GaussianMoments gaussian_moments(double alpha, double t, const GaussianState& state, const OscParams& params,
                                 const SubordinatorSpec& spec = {});

/// Truncated Fock-space models for the generic engine.
LindbladModel free_oscillator_model(int n, const OscParams& params);
LindbladModel damped_oscillator_model(int n, const DampedOscParams& params);

/// |z><z| on n levels, renormalized after truncation.
ComplexMatrix coherent_state(int n, cplx z);

}  // namespace fraclind
