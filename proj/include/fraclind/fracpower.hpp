#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "fraclind/liouville.hpp"
#include "fraclind/subordinator.hpp"

namespace fraclind {

enum class MethodTag { spectral, balakrishnan, subordination };

std::string_view to_string(MethodTag tag);
/// Throws ConfigError for unknown names.
MethodTag method_from_string(std::string_view name);

/// Log-spaced z-grid for the Balakrishnan and Kato integrals.
struct ZQuadrature {
  int n_z = 200;
  double z_min = 1e-6;
  double z_max = 1e6;
};

struct FractionalMethod {
  MethodTag tag = MethodTag::spectral;
  SubordinatorSpec quad;  ///< alpha is taken from the call, not from here
  ZQuadrature z;
};

struct SpectralOptions {
  /// Eigenvalues with Re < -spec_tol put L outside the sector.
  double spec_tol = 1e-9;
  /// |lambda| <= zero_tol * max(1, max |lambda|) is treated as an exact zero.
  double zero_tol = 1e-12;
  EigOptions eig;
};

/// Principal-branch L^alpha through the eigendecomposition; alpha = 1 returns L.
/// Throws SpectrumOutsideSector or NonDiagonalizable.
SuperOperator spectral_power(const SuperOperator& l, double alpha, const SpectralOptions& opts = {});

/// L^alpha = (sin pi alpha / pi) int_0^inf z^{alpha-1} (z + L)^{-1} L dz on a log
/// grid, with analytic end corrections. Needs resolvents only, so it also covers
/// defective L. The resolvents are triangular solves in a Schur basis of L.
SuperOperator balakrishnan_power(const SuperOperator& l, double alpha, const ZQuadrature& quad = {});

/// Resolvent (z + L^alpha)^{-1} from resolvents of L:
///   (sin pi alpha / pi) int_0^inf x^alpha / (z^2 + 2 z x^alpha cos pi alpha + x^{2 alpha}) (x + L)^{-1} dx.
SuperOperator kato_resolvent(const SuperOperator& l, double alpha, double z, const ZQuadrature& quad = {});

/// Dispatches on the method; a spectral request on a defective L falls back to
/// balakrishnan_power.
SuperOperator fractional_power(const SuperOperator& l, double alpha, const FractionalMethod& method = {});

/// Throws SpectrumOutsideSector when some eigenvalue has Re < -tol.
void require_sector(const SuperOperator& l, double tol = 1e-9);

/// A quadrature rule whose panels resolve exp(-L s) for this L: panel width at
/// most 6/rho(L) in s, up to where exp(-s min Re lambda) (nonzero lambda) has
/// dropped below 1e-13, bounded by max_resolved_panels.
QuadratureRule subordination_rule(const SuperOperator& l, double alpha, double t,
                                  SubordinatorSpec spec = {}, int max_resolved_panels = 4000);

/// Sum_i w_i exp(-L s_i). Nodes beyond 1e8 / ||L||_1 reuse the map at that
/// point, where exp(-L s) has long since converged on the kernel of L.
SuperOperator subordinated_map(const SuperOperator& l, double alpha, double t, const QuadratureRule& rule);

/// Phi^(alpha)_t by the requested route; t = 0 is the identity and alpha = 1 is exp(-tL).
SuperOperator fractional_semigroup(const SuperOperator& l, double alpha, double t,
                                   const FractionalMethod& method = {});

/// Phi^(alpha)_t at many times from one generator. The one-off work of the
/// route (eigendecomposition or Balakrishnan power) is done at construction;
/// map() is then cheap and safe to call concurrently. Results equal those of
/// fractional_semigroup with the same arguments.
class FractionalPropagator {
 public:
  FractionalPropagator(const SuperOperator& l, double alpha, const FractionalMethod& method = {});
  SuperOperator map(double t) const;
  /// The route actually taken (a defective L sends spectral to balakrishnan).
  MethodTag route() const;

 private:
  struct Impl;
  std::shared_ptr<const Impl> impl_;
};

struct TimeSeries {
  std::vector<double> times;
  std::vector<ComplexMatrix> values;
  double alpha = 1.0;
  FractionalMethod method;
};

/// A_t(alpha) = Phi^(alpha)_t A0 on the given times.
TimeSeries evolve_observable(const SuperOperator& l, double alpha, const ComplexMatrix& a0,
                             const std::vector<double>& times, const FractionalMethod& method = {});

/// rho_t(alpha) for the density generator Lambda. rho0 must be a state
/// (self-adjoint, PSD to 1e-10, unit trace to 1e-12), else InvalidState.
TimeSeries evolve_density(const SuperOperator& lambda, double alpha, const ComplexMatrix& rho0,
                          const std::vector<double>& times, const FractionalMethod& method = {});

}  // namespace fraclind
