"""Inverse Born series: forward and inverse multilinear series, convergence
radii and error bounds, and a diffuse-wave instantiation."""

from .convergence import (
    ConvergenceReport,
    bloch_radii,
    build_report,
    reconstruction_bound,
    tail_bound,
    theorem1_radius,
)
from .diffuse import (
    Geometry,
    PseudoinverseConfig,
    assemble_family,
    build_geometry,
    green,
    k1_pseudoinverse,
    kernel_bound_check,
    nu_mu_constants,
)
from .estimator import InverseBornSeries
from .inverse import (
    InverseCoefficients,
    LinearizedInverse,
    classical_inverse_coefficients,
    compositions,
    divergence_monitor,
    exact_inverse,
    inverse_coefficients,
    reconstruct,
    weighted_pseudoinverse,
)
from .series import (
    OperatorFamily,
    forward_series,
    forward_tail_bound,
    make_random_matrix_family,
    make_scalar_family,
)

__version__ = "0.1.0"
