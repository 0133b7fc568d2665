"""Fractional Lindblad dynamics on truncated Hilbert spaces.

Superoperators are numpy arrays of shape (N*N, N*N) acting on column-stacked
operators.
"""

from ._core import (  # noqa: F401
    ConfigError,
    FraclindError,
    SpectrumOutsideSector,
    balakrishnan_power,
    check_quantum_operation,
    choi_matrix,
    damped_lambda,
    density,
    density_generator,
    density_half,
    frac_damped_coeffs,
    frac_osc_coeffs,
    fractional_semigroup,
    kato_resolvent,
    laplace_transform_check,
    lindblad_generator,
    quadrature_rule,
    run_config,
    semigroup_map,
    spectral_power,
    unvectorize,
    vectorize,
)

__version__ = "0.1.0"
