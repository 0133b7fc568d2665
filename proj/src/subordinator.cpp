#include "fraclind/subordinator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "fraclind/errors.hpp"

namespace fraclind {

namespace {

using std::numbers::pi;
using cplx = std::complex<double>;
using GK = boost::math::quadrature::gauss_kronrod<double, 15>;

// Envelope drop (e^-37 ~ 1e-16) at which the r-integral is cut.
constexpr double kEnvelopeDrop = 37.0;
// Largest tolerated envelope overshoot e^E* before switching contour angle.
constexpr double kMaxOvershoot = 10.0;
constexpr double kDensityFloor = 1e-9;
constexpr double kConvergedAbs = 1e-8;
constexpr int kMaxPanels = 200000;

template <class T>
struct GkPiece {
  double a = 0.0;
  double b = 0.0;
  T value{};
  double error = 0.0;
  double l1 = 0.0;
};

// One Gauss-Kronrod 7/15 panel with the QUADPACK error estimate. Node tables
// come from Boost; the Gauss nodes are the even-indexed Kronrod abscissae.
template <class T, class F>
GkPiece<T> gk15(F& f, double a, double b) {
  using G7 = boost::math::quadrature::gauss<double, 7>;
  const auto& kx = GK::abscissa();
  const auto& kw = GK::weights();
  const auto& gw = G7::weights();
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  const T f0 = f(mid);
  T k = f0 * kw[0];
  T g = f0 * gw[0];
  double l1 = std::abs(f0) * kw[0];
  for (std::size_t i = 1; i < kx.size(); ++i) {
    const T fp = f(mid + half * kx[i]);
    const T fm = f(mid - half * kx[i]);
    k += (fp + fm) * kw[i];
    l1 += (std::abs(fp) + std::abs(fm)) * kw[i];
    if (i % 2 == 0) g += (fp + fm) * gw[i / 2];
  }
  GkPiece<T> p{a, b};
  p.value = k * half;
  p.l1 = l1 * std::abs(half);
  const double diff = std::abs(k - g) * std::abs(half);
  p.error = p.l1 > 0.0 ? p.l1 * std::min(1.0, std::pow(200.0 * diff / p.l1, 1.5)) : diff;
  p.error = std::max(p.error, 2.0 * std::numeric_limits<double>::epsilon() * p.l1);
  return p;
}

// Bisect until the error estimate falls below ratio * (integral of |f|) + floor on each piece.
template <class T, class F>
GkPiece<T> refine(F& f, const GkPiece<T>& whole, double ratio, double floor, int depth) {
  if (whole.error <= ratio * whole.l1 + floor || depth == 0) return whole;
  const double mid = 0.5 * (whole.a + whole.b);
  const auto l = refine(f, gk15<T>(f, whole.a, mid), ratio, 0.5 * floor, depth - 1);
  const auto r = refine(f, gk15<T>(f, mid, whole.b), ratio, 0.5 * floor, depth - 1);
  return {whole.a, whole.b, l.value + r.value, l.error + r.error, l.l1 + r.l1};
}

// Fixed panels, then bisection where needed so the total error stays below
// rel * |sum| + 100 eps * (integral of |f|); the budget is shared in proportion
// to each panel's share of the integral of |f|.
template <class T, class F>
GkPiece<T> integrate_panels(F& f, const std::vector<double>& edges, double rel) {
  std::vector<GkPiece<T>> pieces;
  pieces.reserve(edges.size());
  T sum{};
  double l1 = 0.0;
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    pieces.push_back(gk15<T>(f, edges[i], edges[i + 1]));
    sum += pieces.back().value;
    l1 += pieces.back().l1;
  }
  GkPiece<T> out{edges.front(), edges.back()};
  if (l1 == 0.0) return out;
  const double ratio = rel * std::abs(sum) / l1 + 100.0 * std::numeric_limits<double>::epsilon();
  // Panels carrying a negligible part of the integral need not meet the relative target.
  const double floor = 1e-3 * rel * std::abs(sum) / static_cast<double>(pieces.size());
  for (const auto& p : pieces) {
    const auto q = refine(f, p, ratio, floor, 10);
    out.value += q.value;
    out.error += q.error;
    out.l1 += q.l1;
  }
  return out;
}

struct RIntegral {
  double value = 0.0;
  double error = 0.0;
};

// Lower edge of the support that matters: f_alpha(1, u) ~ exp(-c u^{-alpha/(1-alpha)}),
// c = (1-alpha) alpha^{alpha/(1-alpha)}; we stop where the exponent reaches 40.
double lower_cut(double alpha) {
  const double c = (1.0 - alpha) * std::pow(alpha, alpha / (1.0 - alpha));
  return std::pow(c / 40.0, (1.0 - alpha) / alpha);
}

// Below this point the leading term exp(-c u^{-alpha/(1-alpha)}) is under e^-80.
double negligible_below(double alpha) {
  const double c = (1.0 - alpha) * std::pow(alpha, alpha / (1.0 - alpha));
  return std::pow(c / 80.0, (1.0 - alpha) / alpha);
}

// Tail mass int_u^inf f_alpha(1, .) ~ u^{-alpha} / Gamma(1 - alpha).
double upper_cut(double alpha, double tail_mass) {
  return std::pow(1.0 / (std::tgamma(1.0 - alpha) * tail_mass), 1.0 / alpha);
}

double peak_log_envelope(double alpha, double theta, double u, double* r_star) {
  const double c1 = -u * std::cos(pi - theta);
  const double c2 = std::cos(alpha * theta);
  *r_star = 0.0;
  if (c2 >= 0.0) return 0.0;
  if (c1 >= 0.0) return INFINITY;
  *r_star = std::pow(alpha * (-c2) / (-c1), 1.0 / (1.0 - alpha));
  return (-c2) * std::pow(*r_star, alpha) * (1.0 - alpha);
}

RIntegral r_integral(double alpha, double theta, double u, double r_max) {
  // Angles measured from pi so that theta = pi gives sin(theta) = 0 exactly;
  // otherwise the rounding of pi swamps the integrand near r = 0.
  const double sin_th = std::sin(pi - theta);
  const double cos_th = -std::cos(pi - theta);
  const double c1 = u * cos_th;
  const double s1 = u * sin_th;
  const double c2 = std::cos(alpha * theta);
  const double s2 = std::sin(alpha * theta);
  auto log_env = [&](double r) { return c1 * r - c2 * std::pow(r, alpha); };
  auto g = [&](double r) {
    const double ra = std::pow(r, alpha);
    const double ph = s1 * r - s2 * ra;
    return std::exp(c1 * r - c2 * ra) * (std::sin(ph) * cos_th + std::cos(ph) * sin_th);
  };

  double r_star = 0.0;
  const double e_star = peak_log_envelope(alpha, theta, u, &r_star);
  if (!std::isfinite(e_star) || (c1 >= 0.0 && c2 <= 0.0))
    throw QuadratureNotConverged("contour integrand does not decay for this angle");

  double rmax = r_max;
  if (!(rmax > 0.0)) {
    const double target = e_star - kEnvelopeDrop;
    double lo = std::max(r_star, 1e-300);
    double hi = std::max(2.0 * r_star, 1e-6);
    while (log_env(hi) > target) {
      lo = hi;
      hi *= 2.0;
      if (hi > 1e300) throw QuadratureNotConverged("contour cutoff search diverged");
    }
    for (int it = 0; it < 200 && hi - lo > 1e-12 * hi; ++it) {
      const double mid = 0.5 * (lo + hi);
      (log_env(mid) > target ? lo : hi) = mid;
    }
    rmax = hi;
  }

  const double r_lo = 1e-12 * std::min(1.0, rmax);
  std::vector<double> edges{r_lo};
  for (double a = r_lo; a < rmax;) {
    const double b = std::min(2.0 * a, rmax);
    const double dra = std::pow(b, alpha) - std::pow(a, alpha);
    const double phase = std::abs(s1) * (b - a) + std::abs(s2) * dra;
    const double env = std::abs(c1) * (b - a) + std::abs(c2) * dra;
    const int m = std::max(1, static_cast<int>(std::ceil(std::max(phase / pi, env / 8.0))));
    if (edges.size() + m > static_cast<std::size_t>(kMaxPanels))
      throw QuadratureNotConverged("contour integral needs too many panels");
    for (int k = 1; k < m; ++k) edges.push_back(a + (b - a) * k / m);
    edges.push_back(b);
    a = b;
  }
  const auto res = integrate_panels<double>(g, edges, 1e-13);
  RIntegral out;
  // [0, r_lo]: the integrand is bounded there, so a midpoint value suffices.
  out.value = r_lo * g(0.5 * r_lo) + res.value;
  out.error = res.error;
  out.value /= pi;
  out.error /= pi;
  return out;
}

// f_alpha(1, u) at the contour angle density() would use, without clamping.
double unit_density(const SubordinatorSpec& spec, double u) {
  if (u < negligible_below(spec.alpha)) return 0.0;
  const double th = effective_theta(spec.alpha, spec.theta, u);
  return density_unit_raw(spec.alpha, th, u, spec.r_max);
}

// Gamma(k alpha + 1) / (pi k!), the size of the k-th coefficient without its sine.
double series_envelope(double alpha, int k) {
  return std::exp(std::lgamma(k * alpha + 1.0) - std::lgamma(k + 1.0)) / pi;
}

double series_coefficient(double alpha, int k) {
  const double sign = (k % 2 == 1) ? 1.0 : -1.0;
  return sign * series_envelope(alpha, k) * std::sin(k * pi * alpha);
}

// Truncated asymptotic sum  sum_k c_k * term(k). Stopping decisions use the
// envelope, since sin(k pi alpha) vanishes or nearly so for some k.
template <class Term>
double asymptotic_sum(double alpha, Term term) {
  double acc = 0.0;
  double prev = INFINITY;
  for (int k = 1; k <= 200; ++k) {
    const double tk = term(k);
    const double env = series_envelope(alpha, k) * std::abs(tk);
    if (env > prev && k > 3) break;
    acc += series_coefficient(alpha, k) * tk;
    prev = env;
    if (env < 1e-19 * std::abs(acc) && k > 3) break;
  }
  return acc;
}

double asymptotic_tail_mass(double alpha, double u) {
  return asymptotic_sum(alpha, [&](int k) { return std::pow(u, -k * alpha) / (k * alpha); });
}

void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    std::ostringstream os;
    os << what << " must be positive and finite, got " << v;
    throw DomainError(os.str());
  }
}

}  // namespace

void SubordinatorSpec::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    std::ostringstream os;
    os << "alpha must lie in (0, 1), got " << alpha;
    throw DomainError(os.str());
  }
  if (!(theta >= pi / 2 - 1e-15 && theta <= pi + 1e-15)) {
    std::ostringstream os;
    os << "contour angle must lie in [pi/2, pi], got " << theta;
    throw DomainError(os.str());
  }
  if (n_nodes < 16) throw DomainError("n_nodes must be at least 16");
  if (s_max_factor < 0.0 || !(tail_mass > 0.0 && tail_mass < 1e-3) || r_max < 0.0 || max_step < 0.0 ||
      resolve_until < 0.0)
    throw DomainError("quadrature controls must be nonnegative (tail_mass in (0, 1e-3))");
}

double QuadratureRule::mass() const {
  double m = 0.0;
  for (double w : weights) m += w;
  return m;
}

double density_half(double t, double s) {
  require_positive(t, "t");
  require_positive(s, "s");
  return t / (2.0 * std::sqrt(pi) * std::pow(s, 1.5)) * std::exp(-t * t / (4.0 * s));
}

double effective_theta(double alpha, double theta, double u) {
  double r_star = 0.0;
  if (peak_log_envelope(alpha, theta, u, &r_star) <= kMaxOvershoot) return theta;
  // The overshoot vanishes at theta = pi/(2 alpha) and grows monotonically
  // beyond it; settle on an angle with a moderate overshoot (about e^5) so
  // the integrand still decays quickly.
  double lo = std::max(pi / 2, pi / (2.0 * alpha));
  double hi = theta;
  for (int it = 0; it < 40; ++it) {
    const double mid = 0.5 * (lo + hi);
    (peak_log_envelope(alpha, mid, u, &r_star) > 0.5 * kMaxOvershoot ? hi : lo) = mid;
  }
  return lo;
}

double density_unit_raw(double alpha, double theta, double u, double r_max) {
  const RIntegral r = r_integral(alpha, theta, u, r_max);
  if (!(r.error <= kConvergedAbs)) {
    std::ostringstream os;
    os << "density at u=" << u << " (alpha=" << alpha << ") has error estimate " << r.error;
    throw QuadratureNotConverged(os.str());
  }
  return r.value;
}

double density(const SubordinatorSpec& spec, double t, double s) {
  spec.validate();
  require_positive(t, "t");
  require_positive(s, "s");
  const double scale = std::pow(t, -1.0 / spec.alpha);
  const double v = scale * unit_density(spec, s * scale);
  if (v >= 0.0) return v;
  if (v >= -kDensityFloor) return 0.0;
  std::ostringstream os;
  os << "density evaluated to " << v << " at t=" << t << ", s=" << s;
  throw QuadratureNotConverged(os.str());
}

double density_unit_asymptotic(double alpha, double u, int derivative) {
  const int j = derivative;
  const double sign = (j % 2 == 0) ? 1.0 : -1.0;
  return sign * asymptotic_sum(alpha, [&](int k) {
           const double beta = k * alpha + 1.0;
           return std::exp(std::lgamma(beta + j) - std::lgamma(beta) - (beta + j) * std::log(u));
         });
}

cplx laplace_integral(const SubordinatorSpec& spec, double t, cplx x) {
  spec.validate();
  require_positive(t, "t");
  if (x.real() < -1e-14 || !std::isfinite(x.real()) || !std::isfinite(x.imag()))
    throw DomainError("Laplace argument needs Re x >= 0");
  const double alpha = spec.alpha;
  const cplx kappa = std::pow(t, 1.0 / alpha) * x;
  const double ak = std::abs(kappa);
  const double u_lo = lower_cut(alpha);

  // Past u^alpha = 3 the large-u series is exact to rounding for every alpha.
  double big_u = std::max(20.0, std::pow(3.0, 1.0 / alpha));
  if (ak > 0.0) big_u = std::max(big_u, 50.0 / ak);
  cplx tail = 0.0;
  if (ak == 0.0) {
    tail = asymptotic_tail_mass(alpha, big_u);
  } else if (kappa.real() * big_u > 46.0) {
    // e^{-kappa u} has killed everything beyond this point.
    big_u = std::max(2.0 * u_lo, 46.0 / kappa.real());
  } else {
    const cplx decay = std::exp(-kappa * big_u);
    cplx acc = 0.0;
    double prev = INFINITY;
    cplx kpow = kappa;
    for (int j = 0; j <= 60; ++j) {
      const cplx term = density_unit_asymptotic(alpha, big_u, j) / kpow;
      const double mag = std::abs(term);
      if (mag > prev) break;
      acc += term;
      prev = mag;
      if (mag < 1e-18 * std::abs(acc)) break;
      kpow *= kappa;
    }
    tail = decay * acc;
  }

  auto h = [&](double u) { return unit_density(spec, u) * std::exp(-kappa * u); };
  std::vector<double> edges{u_lo};
  for (double a = u_lo; a < big_u;) {
    const double b = std::min(2.0 * a, big_u);
    const double w = b - a;
    const int m = std::max(
        1, static_cast<int>(std::ceil(std::max(std::abs(kappa.imag()) * w / pi, kappa.real() * w / 4.0))));
    if (edges.size() + m > static_cast<std::size_t>(kMaxPanels))
      throw QuadratureNotConverged("Laplace integral needs too many panels");
    for (int k = 1; k < m; ++k) edges.push_back(a + w * k / m);
    edges.push_back(b);
    a = b;
  }
  const auto res = integrate_panels<cplx>(h, edges, 1e-11);
  const cplx sum = res.value;
  const double err_total = res.error;
  if (!(err_total <= kConvergedAbs)) {
    std::ostringstream os;
    os << "Laplace integral error estimate " << err_total << " exceeds " << kConvergedAbs;
    throw QuadratureNotConverged(os.str());
  }
  return sum + tail;
}

double laplace_transform_check(const SubordinatorSpec& spec, double t, double x) {
  if (!(x >= 0.0)) throw DomainError("laplace_transform_check needs x >= 0");
  return laplace_integral(spec, t, cplx(x, 0.0)).real();
}

namespace {

struct Panel {
  double a;  // in v = ln u
  double b;
};

struct PanelSum {
  std::vector<double> u;
  std::vector<double> w;
  double total = 0.0;
};

}  // namespace

QuadratureRule quadrature_rule(const SubordinatorSpec& spec, double t) {
  spec.validate();
  require_positive(t, "t");
  const double alpha = spec.alpha;
  const double scale = std::pow(t, 1.0 / alpha);  // s = scale * u

  const double u_lo = lower_cut(alpha);
  const double u_hi = spec.s_max_factor > 0.0 ? spec.s_max_factor : upper_cut(alpha, spec.tail_mass);
  if (!(u_hi > u_lo)) throw DomainError("s_max_factor leaves no support for the density");

  using GL = boost::math::quadrature::gauss<double, 16>;
  std::vector<double> gx, gw;
  for (std::size_t i = 0; i < GL::abscissa().size(); ++i) {
    gx.push_back(GL::abscissa()[i]);
    gw.push_back(GL::weights()[i]);
    if (GL::abscissa()[i] != 0.0) {
      gx.push_back(-GL::abscissa()[i]);
      gw.push_back(GL::weights()[i]);
    }
  }

  auto clamp_density = [&](double u) {
    double f = unit_density(spec, u);
    if (f < 0.0) {
      if (f < -kDensityFloor) throw QuadratureNotConverged("negative density inside quadrature rule");
      f = 0.0;
    }
    return f;
  };

  auto panel_sum = [&](const Panel& p) {
    PanelSum out;
    const double half = 0.5 * (p.b - p.a);
    const double mid = 0.5 * (p.a + p.b);
    for (std::size_t i = 0; i < gx.size(); ++i) {
      const double u = std::exp(mid + half * gx[i]);
      out.u.push_back(u);
      out.w.push_back(clamp_density(u) * u * half * gw[i]);
      out.total += out.w.back();
    }
    return out;
  };

  constexpr double kPanelTol = 1e-13;
  QuadratureRule rule;
  rule.alpha = alpha;
  rule.t = t;

  const double va = std::log(u_lo);
  const double vb = std::log(u_hi);
  const int n0 = std::max(spec.n_nodes / 16, static_cast<int>(std::ceil((vb - va) / 1.5)));

  // Adaptive panels in v = ln u on [a, b]; when step_u > 0 panels starting
  // below resolve_u are also bisected until narrower than step_u in u.
  auto adaptive = [&](double a, double b, double step_u, double resolve_u) {
    if (!(b > a)) return;
    const int n = std::max(1, static_cast<int>(std::ceil(n0 * (b - a) / (vb - va))));
    std::vector<std::pair<Panel, int>> stack;
    for (int i = n - 1; i >= 0; --i) stack.push_back({{a + (b - a) * i / n, a + (b - a) * (i + 1) / n}, 0});
    // Depth-first, leftmost panel first, so nodes come out in increasing order.
    while (!stack.empty()) {
      auto [p, depth] = stack.back();
      stack.pop_back();
      const double mid = 0.5 * (p.a + p.b);
      const Panel left{p.a, mid};
      const Panel right{mid, p.b};
      const double ua = std::exp(p.a);
      bool split = step_u > 0.0 && ua < resolve_u && (std::exp(p.b) - ua) > step_u;
      PanelSum whole;
      if (!split) {
        whole = panel_sum(p);
        const double halves = panel_sum(left).total + panel_sum(right).total;
        split = std::abs(halves - whole.total) > kPanelTol + 1e-10 * std::abs(whole.total) && depth < 30;
      }
      if (split) {
        if (rule.size() + 16 * stack.size() > static_cast<std::size_t>(kMaxPanels))
          throw QuadratureNotConverged("quadrature rule refinement exceeded its budget");
        stack.push_back({right, depth + 1});
        stack.push_back({left, depth + 1});
        continue;
      }
      // Gauss nodes are stored in +/- pairs; emit them sorted.
      std::vector<std::size_t> order(whole.u.size());
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
      std::sort(order.begin(), order.end(), [&](auto i, auto j) { return whole.u[i] < whole.u[j]; });
      for (auto i : order) {
        rule.nodes.push_back(scale * whole.u[i]);
        rule.weights.push_back(whole.w[i]);
      }
    }
  };

  const double s_hi = scale * u_hi;
  const double step = spec.max_step;
  const double s_a = 4.0 * step;
  const double s_b = std::min(spec.resolve_until, s_hi);
  if (!(step > 0.0 && spec.resolve_until > 0.0 && s_b > s_a + step)) {
    adaptive(va, vb, step > 0.0 ? step / scale : 0.0, spec.resolve_until > 0.0 ? spec.resolve_until / scale : u_hi);
  } else {
    // Below s_a: adaptive, resolved to the step. [s_a, s_b]: equal Gauss panels
    // in s, which is accurate because every panel is at most a quarter of its
    // distance from the only singularity of the density (s = 0). Beyond s_b:
    // adaptive again.
    const double ua = std::max(u_lo, s_a / scale);
    adaptive(va, std::log(ua), step / scale, u_hi);
    const double start = scale * ua;
    if (s_b > start) {
      const int panels = static_cast<int>(std::ceil((s_b - start) / step));
      if (rule.size() + 16.0 * panels > kMaxPanels)
        throw QuadratureNotConverged("resolved quadrature rule exceeds its node budget");
      const double h = (s_b - start) / panels;
      std::vector<std::size_t> order(gx.size());
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
      std::sort(order.begin(), order.end(), [&](auto i, auto j) { return gx[i] < gx[j]; });
      rule.uniform_begin = rule.size();
      rule.uniform_panels = static_cast<std::size_t>(panels);
      rule.uniform_start = start;
      rule.uniform_width = h;
      for (int p = 0; p < panels; ++p) {
        const double mid = start + (p + 0.5) * h;
        for (auto i : order) {
          const double sv = mid + 0.5 * h * gx[i];
          rule.nodes.push_back(sv);
          rule.weights.push_back(clamp_density(sv / scale) * 0.5 * h * gw[i] / scale);
        }
      }
    }
    adaptive(std::log(std::max(ua, s_b / scale)), vb, 0.0, 0.0);
  }

  const double m = rule.mass();
  if (!(std::abs(m - 1.0) <= 1e-6)) {
    std::ostringstream os;
    os << "quadrature rule mass " << m << " differs from 1 by more than 1e-6";
    throw QuadratureNotConverged(os.str());
  }
  return rule;
}

}  // namespace fraclind
