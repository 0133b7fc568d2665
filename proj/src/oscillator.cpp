#include "fraclind/oscillator.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "fraclind/errors.hpp"

namespace fraclind {

namespace {

using std::numbers::pi;
constexpr cplx kI{0.0, 1.0};

void require_time(double t) {
  if (!(t >= 0.0) || !std::isfinite(t)) throw DomainError("time must be finite and nonnegative");
}

void require_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    std::ostringstream os;
    os << "alpha must lie in (0, 1], got " << alpha;
    throw DomainError(os.str());
  }
}

void require_levels(int n) {
  if (n < 2) throw DomainError("Fock truncation needs at least 2 levels");
}

}  // namespace

void OscParams::validate() const {
  for (double v : {m, omega, hbar})
    if (!(v > 0.0) || !std::isfinite(v)) throw DomainError("oscillator m, omega and hbar must be positive");
}

FockOperators fock_operators(int n, const OscParams& params) {
  require_levels(n);
  params.validate();
  FockOperators out;
  out.a = ComplexMatrix::Zero(n, n);
  for (int k = 1; k < n; ++k) out.a(k - 1, k) = std::sqrt(static_cast<double>(k));
  const ComplexMatrix ad = out.a.adjoint();
  out.q = std::sqrt(params.hbar / (2.0 * params.m * params.omega)) * (out.a + ad);
  out.p = kI * std::sqrt(params.hbar * params.m * params.omega / 2.0) * (ad - out.a);
  return out;
}

Real2 classical_solution(double t, const OscParams& params) {
  params.validate();
  const double mw = params.m * params.omega;
  const double c = std::cos(params.omega * t);
  const double s = std::sin(params.omega * t);
  Real2 out;
  out << c, s / mw, -mw * s, c;
  return out;
}

FracCoeffs frac_osc_coeffs(double alpha, double t, const OscParams& params, SubordinatorSpec spec) {
  require_alpha(alpha);
  require_time(t);
  params.validate();
  FracCoeffs k{1.0, 0.0, alpha, t};
  if (t == 0.0) return k;
  if (alpha == 1.0) {
    k.c = std::cos(params.omega * t);
    k.s = std::sin(params.omega * t);
    return k;
  }
  spec.alpha = alpha;
  const cplx v = laplace_integral(spec, t, cplx(0.0, -params.omega));
  k.c = v.real();
  k.s = v.imag();
  return k;
}

FracCoeffs frac_osc_oracle(double alpha, double t, const OscParams& params) {
  require_alpha(alpha);
  require_time(t);
  params.validate();
  const cplx v = std::exp(-t * std::pow(cplx(0.0, -params.omega), alpha));
  return {v.real(), v.imag(), alpha, t};
}

Real2 frac_osc_solution(const FracCoeffs& k, const OscParams& params) {
  params.validate();
  const double mw = params.m * params.omega;
  Real2 out;
  out << k.c, k.s / mw, -mw * k.s, k.c;
  return out;
}

Real2 frac_osc_solution(double alpha, double t, const OscParams& params, const SubordinatorSpec& spec) {
  return frac_osc_solution(frac_osc_coeffs(alpha, t, params, spec), params);
}

double DampedOscParams::lambda_from_coeffs() const {
  cplx acc = 0.0;
  for (const auto& [a, b] : coeffs) acc += a * std::conj(b);
  return acc.imag();
}

DampedOscParams damped_params(double m, double omega, double mu, std::vector<std::pair<cplx, cplx>> coeffs,
                              double hbar) {
  OscParams{m, omega, hbar}.validate();
  if (!std::isfinite(mu)) throw DomainError("friction coefficient mu must be finite");
  if (coeffs.empty()) throw DomainError("damped oscillator needs at least one (a_k, b_k) pair");
  for (const auto& [a, b] : coeffs)
    if (!std::isfinite(std::abs(a)) || !std::isfinite(std::abs(b))) throw DomainError("a_k, b_k must be finite");

  DampedOscParams p;
  p.m = m;
  p.omega = omega;
  p.mu = mu;
  p.hbar = hbar;
  p.coeffs = std::move(coeffs);
  p.lambda = p.lambda_from_coeffs();
  p.nu = std::sqrt(cplx(mu * mu - omega * omega, 0.0));
  if (std::abs(p.nu) <= 1e-8 * std::max(omega, std::abs(mu))) {
    std::ostringstream os;
    os << "nu = sqrt(mu^2 - omega^2) vanishes for mu = " << mu << ", omega = " << omega
       << "; use matrix_exp on M directly";
    throw DegenerateNu(os.str());
  }
  const double l = p.lambda;
  const double mw2 = m * omega * omega;
  const cplx nu = p.nu;
  p.M << mu - l, 1.0 / m, -mw2, -mu - l;
  p.N << mw2, mu + nu, mw2, mu - nu;
  p.N_inv << -(mu - nu), mu + nu, mw2, -mw2;
  p.N_inv /= 2.0 * mw2 * nu;
  p.F << -(l + nu), 0.0, 0.0, -(l - nu);
  return p;
}

Complex2 damped_phi(double t, const DampedOscParams& p) {
  require_time(t);
  if (p.nu == 0.0) throw DegenerateNu("nu = 0");
  const cplx ch = std::cosh(p.nu * t);
  const cplx sh = std::sinh(p.nu * t);
  const double e = std::exp(-p.lambda * t);
  Complex2 out;
  out << ch + (p.mu / p.nu) * sh, sh / (p.m * p.nu), -(p.m * p.omega * p.omega / p.nu) * sh, ch - (p.mu / p.nu) * sh;
  return e * out;
}

namespace {

void require_damped_sector(const DampedOscParams& p) {
  const double lo = std::min((p.lambda - p.nu).real(), (p.lambda + p.nu).real());
  if (lo < -1e-14) {
    std::ostringstream os;
    os << "Re(lambda +/- nu) = " << lo << " < 0: lambda = " << p.lambda << " is a gain, not a damping";
    throw SectorViolation(os.str());
  }
}

}  // namespace

FracDampedCoeffs frac_damped_coeffs(double alpha, double t, const DampedOscParams& p, SubordinatorSpec spec) {
  require_alpha(alpha);
  require_time(t);
  require_damped_sector(p);
  FracDampedCoeffs k{1.0, 0.0, alpha, t};
  if (t == 0.0) return k;
  if (alpha == 1.0) {
    const double e = std::exp(-p.lambda * t);
    k.ch = e * std::cosh(p.nu * t);
    k.sh = e * std::sinh(p.nu * t);
    return k;
  }
  spec.alpha = alpha;
  const cplx minus = laplace_integral(spec, t, p.lambda - p.nu);
  const cplx plus = laplace_integral(spec, t, p.lambda + p.nu);
  k.ch = 0.5 * (minus + plus);
  k.sh = 0.5 * (minus - plus);
  return k;
}

FracDampedCoeffs frac_damped_oracle(double alpha, double t, const DampedOscParams& p) {
  require_alpha(alpha);
  require_time(t);
  require_damped_sector(p);
  const cplx minus = std::exp(-t * std::pow(p.lambda - p.nu, alpha));
  const cplx plus = std::exp(-t * std::pow(p.lambda + p.nu, alpha));
  return {0.5 * (minus + plus), 0.5 * (minus - plus), alpha, t};
}

cplx macdonald_k_half(cplx z) {
  if (z.real() < 0.0 || z == 0.0) throw DomainError("K_{-1/2}(z) needs Re z >= 0, z != 0");
  return std::sqrt(pi / (2.0 * z)) * std::exp(-z);
}

FracDampedCoeffs frac_damped_macdonald(double t, const DampedOscParams& p) {
  if (!(t > 0.0)) throw DomainError("Macdonald form needs t > 0");
  require_damped_sector(p);
  auto v = [&](cplx q) { return std::pow(4.0 * q / (t * t), 0.25) * macdonald_k_half(t * std::sqrt(q)); };
  const double pref = t / (2.0 * std::sqrt(pi));
  const cplx minus = v(p.lambda - p.nu);
  const cplx plus = v(p.lambda + p.nu);
  return {pref * (minus + plus), pref * (minus - plus), 0.5, t};
}

Complex2 frac_damped_solution(const FracDampedCoeffs& k, const DampedOscParams& p) {
  Complex2 out;
  out << k.ch + (p.mu / p.nu) * k.sh, k.sh / (p.m * p.nu), -(p.m * p.omega * p.omega / p.nu) * k.sh,
      k.ch - (p.mu / p.nu) * k.sh;
  return out;
}

Complex2 frac_damped_solution(double alpha, double t, const DampedOscParams& p, const SubordinatorSpec& spec) {
  return frac_damped_solution(frac_damped_coeffs(alpha, t, p, spec), p);
}

GaussianMoments gaussian_moments(const FracCoeffs& k, const GaussianState& st, const OscParams& pr) {
  pr.validate();
  if (!(st.a > 0.0)) throw DomainError("Gaussian width a must be positive");
  const double mw = pr.m * pr.omega;
  const double a2 = st.a * st.a;
  const double h2 = pr.hbar * pr.hbar;
  const double c2 = k.c * k.c;
  const double s2 = k.s * k.s;
  GaussianMoments g;
  g.mean_q = st.x0 * k.c + st.p0 * k.s / mw;
  g.mean_p = st.p0 * k.c - mw * st.x0 * k.s;
  g.disp_q = 0.5 * a2 * c2 + h2 / (2.0 * a2 * mw * mw) * s2;
  g.disp_p = h2 / (2.0 * a2) * c2 + 0.5 * a2 * mw * mw * s2;
  return g;
}

GaussianMoments gaussian_moments(double alpha, double t, const GaussianState& st, const OscParams& pr,
                                 const SubordinatorSpec& spec) {
  return gaussian_moments(frac_osc_coeffs(alpha, t, pr, spec), st, pr);
}

LindbladModel free_oscillator_model(int n, const OscParams& params) {
  const FockOperators f = fock_operators(n, params);
  const ComplexMatrix h =
      f.p * f.p / (2.0 * params.m) + 0.5 * params.m * params.omega * params.omega * f.q * f.q;
  return LindbladModel(0.5 * (h + h.adjoint()), {}, params.hbar);
}

LindbladModel damped_oscillator_model(int n, const DampedOscParams& p) {
  const FockOperators f = fock_operators(n, OscParams{p.m, p.omega, p.hbar});
  ComplexMatrix h = f.p * f.p / (2.0 * p.m) + 0.5 * p.m * p.omega * p.omega * f.q * f.q +
                    0.5 * p.mu * (f.p * f.q + f.q * f.p);
  h = 0.5 * (h + h.adjoint());
  std::vector<ComplexMatrix> v;
  for (const auto& [a, b] : p.coeffs) v.push_back(a * f.p + b * f.q);
  return LindbladModel(h, std::move(v), p.hbar);
}

ComplexMatrix coherent_state(int n, cplx z) {
  require_levels(n);
  ComplexVector psi(n);
  psi(0) = 1.0;
  for (int k = 1; k < n; ++k) psi(k) = psi(k - 1) * z / std::sqrt(static_cast<double>(k));
  psi.normalize();
  return psi * psi.adjoint();
}

}  // namespace fraclind
