#pragma once

#include <complex>
#include <numbers>
#include <vector>

namespace fraclind {

/// Controls for the one-sided alpha-stable density f_alpha(t, s) and for
/// integrals against it.
struct SubordinatorSpec {
  double alpha = 0.5;
  /// Opening angle of the two-ray contour, pi/2 <= theta <= pi.
  double theta = std::numbers::pi;
  /// Initial node budget of quadrature_rule (16-point panels); panels are
  /// refined beyond it until the mass integral settles.
  int n_nodes = 400;
  /// When positive, s_max = s_max_factor * t^(1/alpha); otherwise s_max is
  /// placed where the remaining tail mass drops below tail_mass.
  double s_max_factor = 0.0;
  double tail_mass = 1e-10;
  /// Cutoff of the r-integral at t = 1; zero picks it from the integrand envelope.
  double r_max = 0.0;
  /// Optional resolution of oscillatory integrands: panels covering s below
  /// resolve_until are no wider than max_step (both in units of s). Past
  /// 4 * max_step the resolved range is laid out as equal-width panels.
  double max_step = 0.0;
  double resolve_until = 0.0;

  /// Throws DomainError unless 0 < alpha < 1 and pi/2 <= theta <= pi.
  void validate() const;
};

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
  double alpha = 0.0;
  double t = 0.0;
  /// Resolved rules contain a run of equal-width 16-point Gauss panels in s:
  /// nodes [uniform_begin, uniform_begin + 16 * uniform_panels) cover
  /// [uniform_start, uniform_start + uniform_panels * uniform_width].
  /// Callers may exploit the repetition; integrate() does not need to.
  std::size_t uniform_begin = 0;
  std::size_t uniform_panels = 0;
  double uniform_start = 0.0;
  double uniform_width = 0.0;

  std::size_t size() const noexcept { return nodes.size(); }
  double mass() const;

  template <class G>
  auto integrate(G&& g) const -> decltype(g(0.0) * 1.0) {
    decltype(g(0.0) * 1.0) acc{};
    for (std::size_t i = 0; i < nodes.size(); ++i) acc += weights[i] * g(nodes[i]);
    return acc;
  }
};

/// f_{1/2}(t, s) = t / (2 sqrt(pi) s^{3/2}) exp(-t^2 / 4s).
double density_half(double t, double s);

/// f_alpha(t, s) from the real two-ray integral, evaluated at (1, s t^{-1/alpha})
/// and rescaled. Quadrature noise in [-1e-9, 0) is reported as 0.
double density(const SubordinatorSpec& spec, double t, double s);

/// f_alpha(1, u) with an explicit contour angle; no clamping, no fallback.
double density_unit_raw(double alpha, double theta, double u, double r_max = 0.0);

/// The contour angle density() actually uses at (1, u). The configured angle
/// is kept unless its integrand envelope would overshoot by more than e^10,
/// which happens for alpha > 1/2 near s = 0.
double effective_theta(double alpha, double theta, double u);

/// Integral of f_alpha(t, s) exp(-s x) over s > 0 for Re x >= 0. The far tail
/// is summed by parts from the large-s expansion of the density, so purely
/// oscillatory x (Re x = 0) is handled as well.
std::complex<double> laplace_integral(const SubordinatorSpec& spec, double t,
                                      std::complex<double> x);

/// Numerical left side of  int f_alpha(t,s) e^{-sx} ds = e^{-t x^alpha}.
double laplace_transform_check(const SubordinatorSpec& spec, double t, double x);

QuadratureRule quadrature_rule(const SubordinatorSpec& spec, double t);

/// Large-s expansion f_alpha(1, u) ~ (1/pi) sum_k (-1)^{k+1} Gamma(k alpha + 1)/k!
/// sin(k pi alpha) u^{-k alpha - 1}, and its derivatives; valid for u^alpha >> 1.
double density_unit_asymptotic(double alpha, double u, int derivative = 0);

}  // namespace fraclind
