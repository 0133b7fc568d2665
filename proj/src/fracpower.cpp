#include "fraclind/fracpower.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numbers>
#include <optional>
#include <sstream>

#include <boost/math/quadrature/gauss.hpp>

#include "fraclind/errors.hpp"

namespace fraclind {

namespace {

using std::numbers::pi;
using GL16 = boost::math::quadrature::gauss<double, 16>;

void require_alpha(double alpha, bool allow_one) {
  const bool ok = alpha > 0.0 && (allow_one ? alpha <= 1.0 : alpha < 1.0);
  if (!ok) {
    std::ostringstream os;
    os << "alpha must lie in (0, " << (allow_one ? "1]" : "1)") << ", got " << alpha;
    throw DomainError(os.str());
  }
}

// Gauss-Legendre nodes and weights on [-1, 1].
const std::vector<std::pair<double, double>>& gl16() {
  static const std::vector<std::pair<double, double>> table = [] {
    std::vector<std::pair<double, double>> t;
    for (std::size_t i = 0; i < GL16::abscissa().size(); ++i) {
      t.push_back({GL16::abscissa()[i], GL16::weights()[i]});
      if (GL16::abscissa()[i] != 0.0) t.push_back({-GL16::abscissa()[i], GL16::weights()[i]});
    }
    std::sort(t.begin(), t.end());
    return t;
  }();
  return table;
}

struct LogNode {
  double x;       // abscissa
  double weight;  // weight for integrating in ln x
  double spacing; // local node spacing in ln x
};

std::vector<LogNode> log_grid(double lo, double hi, int panels) {
  std::vector<LogNode> out;
  const double a = std::log(lo);
  const double width = (std::log(hi) - a) / panels;
  for (int p = 0; p < panels; ++p) {
    const double mid = a + (p + 0.5) * width;
    for (const auto& [x, w] : gl16())
      out.push_back({std::exp(mid + 0.5 * width * x), 0.5 * width * w, width / 16.0});
  }
  return out;
}

ComplexVector eigenvalues_only(const ComplexMatrix& m) {
  Eigen::ComplexEigenSolver<ComplexMatrix> es(m, false);
  if (es.info() != Eigen::Success) throw NonDiagonalizable("eigenvalue iteration did not converge");
  return es.eigenvalues();
}

void require_sector_values(const ComplexVector& ev, double tol) {
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev(i).real() < -tol) {
      std::ostringstream os;
      os << "eigenvalue " << ev(i) << " lies outside the closed right half-plane";
      throw SpectrumOutsideSector(os.str());
    }
  }
}

double zero_threshold(const ComplexVector& ev, double zero_tol) {
  double rho = 0.0;
  for (Eigen::Index i = 0; i < ev.size(); ++i) rho = std::max(rho, std::abs(ev(i)));
  return zero_tol * std::max(1.0, rho);
}

void validate_times(const std::vector<double>& times) {
  if (times.empty()) throw DomainError("time grid is empty");
  if (!(times.front() >= 0.0)) throw DomainError("times must start at t >= 0");
  for (std::size_t i = 1; i < times.size(); ++i)
    if (!(times[i] > times[i - 1])) throw DomainError("times must be strictly increasing");
}

// Propagation in the eigenbasis, x_t = V (exp(-t lambda^alpha) o V^-1 x).
struct SpectralPropagator {
  EigDecomposition eig;
  ComplexVector powers;

  SpectralPropagator(const SuperOperator& l, double alpha, const SpectralOptions& opts = {}) {
    eig = eig_decompose(l.mat(), opts.eig);
    require_sector_values(eig.values, opts.spec_tol);
    const double zt = zero_threshold(eig.values, opts.zero_tol);
    powers.resize(eig.values.size());
    for (Eigen::Index i = 0; i < powers.size(); ++i) {
      const cplx z = eig.values(i);
      powers(i) = std::abs(z) <= zt ? cplx(0.0) : (alpha == 1.0 ? z : std::pow(z, alpha));
    }
  }

  ComplexVector factors(double t) const {
    ComplexVector f(powers.size());
    for (Eigen::Index i = 0; i < f.size(); ++i) f(i) = std::exp(-t * powers(i));
    return f;
  }

  ComplexMatrix map(double t) const { return eig.vectors * factors(t).asDiagonal() * eig.vectors_inv; }
  ComplexVector apply(double t, const ComplexVector& coeffs) const {
    return eig.vectors * factors(t).cwiseProduct(coeffs);
  }
};

}  // namespace

std::string_view to_string(MethodTag tag) {
  switch (tag) {
    case MethodTag::spectral:
      return "spectral";
    case MethodTag::balakrishnan:
      return "balakrishnan";
    case MethodTag::subordination:
      return "subordination";
  }
  return "unknown";
}

MethodTag method_from_string(std::string_view name) {
  if (name == "spectral") return MethodTag::spectral;
  if (name == "balakrishnan") return MethodTag::balakrishnan;
  if (name == "subordination") return MethodTag::subordination;
  throw ConfigError("unknown method '" + std::string(name) +
                    "' (expected spectral, balakrishnan or subordination)");
}

void require_sector(const SuperOperator& l, double tol) { require_sector_values(eigenvalues_only(l.mat()), tol); }

SuperOperator spectral_power(const SuperOperator& l, double alpha, const SpectralOptions& opts) {
  require_alpha(alpha, true);
  if (alpha == 1.0) return l;
  const EigDecomposition eig = eig_decompose(l.mat(), opts.eig);
  require_sector_values(eig.values, opts.spec_tol);
  const double zt = zero_threshold(eig.values, opts.zero_tol);
  return {l.dim(), matrix_function(eig, [&](cplx z) { return std::abs(z) <= zt ? cplx(0.0) : std::pow(z, alpha); })};
}

namespace {

// L = U T U^dag with T upper triangular. Resolvents of L become triangular
// solves against T, and every product stays upper triangular, so the z-integrals
// are accumulated in the Schur basis and rotated back once.
struct SchurResolvent {
  ComplexMatrix u;
  ComplexMatrix t;
  double scale = 1.0;

  explicit SchurResolvent(const ComplexMatrix& l) {
    Eigen::ComplexSchur<ComplexMatrix> schur(l);
    if (schur.info() != Eigen::Success) throw NonDiagonalizable("Schur iteration did not converge");
    u = schur.matrixU();
    t = schur.matrixT();
    t.triangularView<Eigen::StrictlyLower>().setZero();
    scale = std::max(1.0, norm1(t));
  }

  // (z + T)^{-1} B for upper-triangular B.
  ComplexMatrix solve(double z, const ComplexMatrix& b) const {
    ComplexMatrix shifted = t;
    shifted.diagonal().array() += z;
    const double pivot = shifted.diagonal().cwiseAbs().minCoeff();
    if (!(pivot > 1e-14 * scale)) {
      std::ostringstream os;
      os << "z + L is singular at z = " << z;
      throw Singular(os.str());
    }
    ComplexMatrix x = shifted.triangularView<Eigen::Upper>().solve(b);
    x.triangularView<Eigen::StrictlyLower>().setZero();
    return x;
  }

  ComplexMatrix rotate_back(const ComplexMatrix& x) const { return u * x * u.adjoint(); }
};

}  // namespace

SuperOperator balakrishnan_power(const SuperOperator& l, double alpha, const ZQuadrature& quad) {
  require_alpha(alpha, true);
  if (alpha == 1.0) return l;
  if (!(quad.z_min > 0.0 && quad.z_max > quad.z_min) || quad.n_z < 16)
    throw DomainError("z-grid needs 0 < z_min < z_max and at least 16 nodes");
  require_square_finite(l.mat(), "generator");
  const SchurResolvent r(l.mat());
  const ComplexMatrix& tm = r.t;
  const Eigen::Index n = tm.rows();

  ComplexMatrix acc = ComplexMatrix::Zero(n, n);
  bool warned = false;
  for (const auto& node : log_grid(quad.z_min, quad.z_max, std::max(1, quad.n_z / 16))) {
    double z = node.x;
    ComplexMatrix x;
    try {
      x = r.solve(z, tm);
    } catch (const Singular&) {
      z *= std::exp(0.5 * node.spacing);
      if (!warned) std::clog << "fraclind: resolvent singular at z=" << node.x << ", node shifted\n";
      warned = true;
      x = r.solve(z, tm);
    }
    // dz = z d(ln z), so the ln z integrand is z^alpha (z + L)^{-1} L.
    acc += (node.weight * std::pow(z, alpha)) * x;
  }

  // [0, z_min]: (z + L)^{-1} L is nearly constant there.
  const double zl = quad.z_min;
  acc += (std::pow(zl, alpha) / alpha) * r.solve(zl, tm);

  // [z_max, inf): expand (z + L)^{-1} L = sum_m (-1)^m L^{m+1} z^{-m-1}.
  const double zh = quad.z_max;
  ComplexMatrix tp = tm;
  for (int m = 0; m < 3; ++m) {
    const double c = (m % 2 == 0 ? 1.0 : -1.0) * std::pow(zh, alpha - 1.0 - m) / (m + 1.0 - alpha);
    acc += c * tp;
    tp = tp * tm;
  }
  return {l.dim(), (std::sin(pi * alpha) / pi) * r.rotate_back(acc)};
}

SuperOperator kato_resolvent(const SuperOperator& l, double alpha, double z, const ZQuadrature& quad) {
  require_alpha(alpha, false);
  if (!(z > 0.0) || !std::isfinite(z)) throw DomainError("Kato resolvent needs z > 0");
  require_square_finite(l.mat(), "generator");
  const SchurResolvent r(l.mat());
  const ComplexMatrix& tm = r.t;
  const Eigen::Index n = tm.rows();
  const ComplexMatrix id = ComplexMatrix::Identity(n, n);
  const double c = std::cos(pi * alpha);
  const double norm_l = norm1(l.mat());

  // Cut points chosen so that both end expansions converge with ratio <= 1e-3.
  // The low cut stays above rounding level of the spectrum (a kernel eigenvalue
  // is only ~eps ||L|| away from 0) while the expansion ratio is <= 0.05.
  const double x_floor = std::min(1e-10 * r.scale, std::pow(0.05 * z, 1.0 / alpha));
  const double x_lo = std::min(quad.z_min * 1e-2, std::max(std::pow(1e-3 * z, 1.0 / alpha), x_floor));
  const double x_hi = std::max({quad.z_max, 1e3 * norm_l, std::pow(1e3 * z, 1.0 / alpha)});

  // In ln x the weight has poles at Im = +/- pi (1 - alpha) / alpha and the
  // resolvent at distance >= pi/2; keep panel half-widths well inside both.
  const double d = std::min(pi / 2, pi * (1.0 - alpha) / alpha);
  const double span = std::log(x_hi) - std::log(x_lo);
  const int panels = std::max(std::max(1, quad.n_z / 16), static_cast<int>(std::ceil(span / (2.0 * d / 1.5))));

  auto weight = [&](double x) {
    const double xa = std::pow(x, alpha);
    return xa / (z * z + 2.0 * z * xa * c + xa * xa);
  };

  ComplexMatrix acc = ComplexMatrix::Zero(n, n);
  for (const auto& node : log_grid(x_lo, x_hi, panels)) {
    const double x = node.x;
    acc += (node.weight * x * weight(x)) * r.solve(x, id);
  }

  // U_n(-cos pi alpha) = sin((n + 1) phi) / sin(phi), phi = pi (1 - alpha).
  const double phi = pi * (1.0 - alpha);
  auto cheb = [&](int k) { return std::sin((k + 1) * phi) / std::sin(phi); };
  constexpr int kTerms = 8;

  // [0, x_lo]: x (x + L)^{-1} is frozen at x_lo; the weight is expanded in x^alpha / z.
  const ComplexMatrix g = x_lo * r.solve(x_lo, id);
  double low = 0.0;
  for (int k = 0; k < kTerms; ++k)
    low += cheb(k) * std::pow(z, -k - 2.0) * std::pow(x_lo, alpha * (k + 1)) / (alpha * (k + 1));
  acc += low * g;

  // [x_hi, inf): (x + L)^{-1} = sum_m (-L)^m x^{-m-1}, weight expanded in z x^{-alpha}.
  ComplexMatrix tp = id;
  for (int m = 0; m < kTerms; ++m) {
    double coef = 0.0;
    for (int k = 0; k < kTerms; ++k) {
      const double p = alpha * (k + 1) + m;
      coef += cheb(k) * std::pow(z, k) * std::pow(x_hi, -p) / p;
    }
    acc += coef * tp;
    tp = -(tp * tm);
  }
  return {l.dim(), (std::sin(pi * alpha) / pi) * r.rotate_back(acc)};
}

SuperOperator fractional_power(const SuperOperator& l, double alpha, const FractionalMethod& method) {
  switch (method.tag) {
    case MethodTag::balakrishnan:
      return balakrishnan_power(l, alpha, method.z);
    case MethodTag::spectral:
    case MethodTag::subordination:
      try {
        return spectral_power(l, alpha);
      } catch (const NonDiagonalizable&) {
        return balakrishnan_power(l, alpha, method.z);
      }
  }
  throw DomainError("unknown fractional method");
}

QuadratureRule subordination_rule(const SuperOperator& l, double alpha, double t, SubordinatorSpec spec,
                                  int max_resolved_panels) {
  spec.alpha = alpha;
  const ComplexVector ev = eigenvalues_only(l.mat());
  const double zt = zero_threshold(ev, 1e-12);
  double rho = 0.0;
  double delta = INFINITY;
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    const double a = std::abs(ev(i));
    rho = std::max(rho, a);
    if (a > zt) delta = std::min(delta, ev(i).real());
  }
  if (rho > 0.0) {
    const double step = 6.0 / rho;
    spec.max_step = spec.max_step > 0.0 ? std::min(spec.max_step, step) : step;
    const double cap = max_resolved_panels * spec.max_step;
    // exp(-30) ~ 1e-13: beyond this every nonzero mode has decayed.
    const double until = delta > 0.0 ? 30.0 / delta : cap;
    spec.resolve_until = std::max(spec.resolve_until, std::min(until, cap));
  }
  return quadrature_rule(spec, t);
}

SuperOperator subordinated_map(const SuperOperator& l, double alpha, double t, const QuadratureRule& rule) {
  require_alpha(alpha, false);
  if (!(t > 0.0)) throw DomainError("subordinated_map needs t > 0");
  if (rule.t != t || rule.alpha != alpha) throw DomainError("quadrature rule was built for a different (alpha, t)");
  require_sector(l);
  const ComplexMatrix& lm = l.mat();
  const Eigen::Index n = lm.rows();
  const double nl = norm1(lm);
  if (nl == 0.0) return SuperOperator::identity(l.dim()).scaled(rule.mass());
  const double s_cap = 1e8 / nl;

  ComplexMatrix acc = ComplexMatrix::Zero(n, n);
  double saturated = 0.0;
  auto add_node = [&](std::size_t i) {
    if (rule.nodes[i] > s_cap)
      saturated += rule.weights[i];
    else
      acc += rule.weights[i] * matrix_exp(-lm, rule.nodes[i]);
  };

  // Equal-width panels repeat the same node offsets, so per panel
  //   sum_j w_j exp(-L (c + d_j)) = exp(-L c) sum_j w_j exp(-L d_j),
  // and exp(-L c) advances by one fixed factor from panel to panel.
  std::size_t ub = rule.uniform_begin;
  std::size_t ue = ub + 16 * rule.uniform_panels;
  const double h = rule.uniform_width;
  const bool fast = rule.uniform_panels > 0 && ue <= rule.size() &&
                    rule.uniform_start + rule.uniform_panels * h <= s_cap;
  if (!fast) ub = ue = rule.size();

  for (std::size_t i = 0; i < ub; ++i) add_node(i);
  if (fast) {
    std::vector<ComplexMatrix> offsets;
    for (std::size_t j = 0; j < 16; ++j) offsets.push_back(matrix_exp(-lm, rule.nodes[ub + j] - rule.uniform_start));
    const ComplexMatrix advance = matrix_exp(-lm, h);
    ComplexMatrix corner = matrix_exp(-lm, rule.uniform_start);
    ComplexMatrix local(n, n);
    for (std::size_t p = 0; p < rule.uniform_panels; ++p) {
      local.setZero();
      for (std::size_t j = 0; j < 16; ++j) local += rule.weights[ub + 16 * p + j] * offsets[j];
      acc.noalias() += corner * local;
      corner = corner * advance;
    }
  }
  for (std::size_t i = ue; i < rule.size(); ++i) add_node(i);
  if (saturated > 0.0) acc += saturated * matrix_exp(-lm, s_cap);
  return {l.dim(), acc};
}

struct FractionalPropagator::Impl {
  SuperOperator l;
  double alpha;
  FractionalMethod method;
  MethodTag route;
  std::optional<SpectralPropagator> spectral;
  std::optional<SuperOperator> power;
};

FractionalPropagator::FractionalPropagator(const SuperOperator& l, double alpha, const FractionalMethod& method) {
  require_alpha(alpha, true);
  auto impl = std::make_shared<Impl>(Impl{l, alpha, method, method.tag, std::nullopt, std::nullopt});
  if (alpha == 1.0) {
    require_sector(l);
  } else if (method.tag == MethodTag::spectral) {
    try {
      impl->spectral.emplace(l, alpha);
    } catch (const NonDiagonalizable&) {
      impl->route = MethodTag::balakrishnan;
    }
  }
  if (alpha < 1.0 && impl->route == MethodTag::balakrishnan) {
    require_sector(l);
    impl->power = balakrishnan_power(l, alpha, method.z);
  }
  impl_ = std::move(impl);
}

MethodTag FractionalPropagator::route() const { return impl_->route; }

SuperOperator FractionalPropagator::map(double t) const {
  if (!(t >= 0.0)) throw DomainError("time must be nonnegative");
  const Impl& m = *impl_;
  if (t == 0.0) return SuperOperator::identity(m.l.dim());
  if (m.alpha == 1.0) return semigroup_map(m.l, t);
  if (m.spectral) return {m.l.dim(), m.spectral->map(t)};
  if (m.power) return semigroup_map(*m.power, t);
  return subordinated_map(m.l, m.alpha, t, subordination_rule(m.l, m.alpha, t, m.method.quad));
}

SuperOperator fractional_semigroup(const SuperOperator& l, double alpha, double t, const FractionalMethod& method) {
  require_alpha(alpha, true);
  if (!(t >= 0.0)) throw DomainError("time must be nonnegative");
  if (t == 0.0) return SuperOperator::identity(l.dim());
  return FractionalPropagator(l, alpha, method).map(t);
}

namespace {

TimeSeries evolve(const SuperOperator& gen, double alpha, const ComplexMatrix& x0, const std::vector<double>& times,
                  const FractionalMethod& method) {
  require_alpha(alpha, true);
  validate_times(times);
  if (x0.rows() != gen.dim() || x0.cols() != gen.dim()) throw ShapeMismatch("initial operator does not match generator");
  TimeSeries out;
  out.times = times;
  out.alpha = alpha;
  out.method = method;
  out.values.reserve(times.size());
  const ComplexVector v0 = vectorize(x0);

  if (method.tag == MethodTag::spectral || alpha == 1.0) {
    std::optional<SpectralPropagator> prop;
    try {
      prop.emplace(gen, alpha);
    } catch (const NonDiagonalizable&) {
    }
    if (prop) {
      const ComplexVector coeffs = prop->eig.vectors_inv * v0;
      for (double t : times) out.values.push_back(t == 0.0 ? x0 : unvectorize(prop->apply(t, coeffs)));
      return out;
    }
    if (alpha == 1.0) {
      for (double t : times) out.values.push_back(t == 0.0 ? x0 : semigroup_map(gen, t).apply(x0));
      return out;
    }
  }
  if (method.tag != MethodTag::subordination) {
    require_sector(gen);
    const SuperOperator power = balakrishnan_power(gen, alpha, method.z);
    for (double t : times) out.values.push_back(t == 0.0 ? x0 : semigroup_map(power, t).apply(x0));
    return out;
  }
  for (double t : times)
    out.values.push_back(t == 0.0 ? x0 : fractional_semigroup(gen, alpha, t, method).apply(x0));
  return out;
}

}  // namespace

TimeSeries evolve_observable(const SuperOperator& l, double alpha, const ComplexMatrix& a0,
                             const std::vector<double>& times, const FractionalMethod& method) {
  require_square_finite(a0, "initial observable");
  if (hermiticity_residual(a0) > 1e-10) std::clog << "fraclind: initial observable is not self-adjoint\n";
  return evolve(l, alpha, a0, times, method);
}

TimeSeries evolve_density(const SuperOperator& lambda, double alpha, const ComplexMatrix& rho0,
                          const std::vector<double>& times, const FractionalMethod& method) {
  require_square_finite(rho0, "initial density operator");
  if (hermiticity_residual(rho0) > 1e-10) throw InvalidState("initial density operator is not self-adjoint");
  const cplx tr = rho0.trace();
  if (std::abs(tr - 1.0) > 1e-12) {
    std::ostringstream os;
    os << "initial density operator has trace " << tr;
    throw InvalidState(os.str());
  }
  const double min_eig = min_hermitian_eigenvalue(rho0, 1e-10);
  if (min_eig < -1e-10) {
    std::ostringstream os;
    os << "initial density operator has eigenvalue " << min_eig;
    throw InvalidState(os.str());
  }
  return evolve(lambda, alpha, rho0, times, method);
}

}  // namespace fraclind
