"""Convergence radius, Bloch radii and error bounds for the inverse Born series."""

import math
from dataclasses import asdict, dataclass
from typing import NamedTuple, Optional

import numpy as np

from .exceptions import OutsideRadiusError
from .inverse import inverse_coefficients, reconstruct

VARIANTS = ("theorem", "proposition")


def bloch_radii(M):
    """Bloch radii ``(r, P)`` for a normalized holomorphic map bounded by ``M``.

    ``r = 1/sqrt(4M^2+1)`` and ``P = 1/(2M + sqrt(4M^2+1))``.
    """
    if not M > 0:
        raise ValueError(f"M must be positive, got {M}")
    root = math.sqrt(4.0 * M * M + 1.0)
    return 1.0 / root, 1.0 / (2.0 * M + root)


def c_constant(nu, mu, k1_norm, variant="theorem"):
    floor = {"theorem": 2.0, "proposition": 1.0}.get(variant)
    if floor is None:
        raise ValueError(f"variant must be one of {VARIANTS}, got {variant!r}")
    return max(floor, k1_norm * nu)


def theorem1_radius(nu, mu, k1_norm, variant="theorem"):
    """Constant ``C``, convergence radius ``r`` and image radius ``r0``.

    ``r = (sqrt(16C^2+1) - 4C) / (2 mu)`` is evaluated in the
    cancellation-free form ``1 / (2 mu (sqrt(16C^2+1) + 4C))``.
    """
    if not (nu > 0 and mu > 0 and k1_norm > 0):
        raise ValueError(f"nu, mu and ||K1inv|| must be positive, got {nu}, {mu}, {k1_norm}")
    C = c_constant(nu, mu, k1_norm, variant)
    root = math.sqrt(16.0 * C * C + 1.0)
    r = 1.0 / (2.0 * mu * (root + 4.0 * C))
    r0 = 2.0 * mu / root
    return C, r, r0


def tail_bound(eta1_norm, r, M, N):
    """``M q^(N+1) / (1 - q)`` with ``q = eta1_norm / r``."""
    q = eta1_norm / r
    if q >= 1.0:
        raise OutsideRadiusError(f"||K1inv phi|| / r = {q} >= 1")
    return M * q ** (N + 1) / (1.0 - q)


class ReconstructionBound(NamedTuple):
    """Bound on ``||eta_inf - eta||``; ``value`` is None when inapplicable.

    ``margin`` is the admissible size of ``Mcal`` minus its actual value, so a
    nonpositive margin means the bound does not apply.
    """

    value: Optional[float]
    margin: float

    @property
    def applicable(self):
        return self.value is not None


def m_condition_limit(nu, mu, k1_norm):
    a = nu * k1_norm
    return (1.0 - math.sqrt(a / (1.0 + a))) / mu


def reconstruction_bound(nu, mu, k1_norm, Mcal, linearization_residual):
    """Bound on the distance between the series limit and the true contrast.

    Applies only when ``Mcal < (1 - sqrt(a/(1+a))) / mu`` with
    ``a = nu ||K1inv||``; then the bound is
    ``residual / (1 - a/(1 - mu Mcal)^2 + a)``.
    """
    if not (nu > 0 and mu > 0 and k1_norm > 0):
        raise ValueError(f"nu, mu and ||K1inv|| must be positive, got {nu}, {mu}, {k1_norm}")
    margin = m_condition_limit(nu, mu, k1_norm) - Mcal
    if margin <= 0:
        return ReconstructionBound(None, margin)
    a = nu * k1_norm
    prefactor = 1.0 / (1.0 - a / (1.0 - mu * Mcal) ** 2 + a)
    return ReconstructionBound(prefactor * linearization_residual, margin)


@dataclass
class ConvergenceReport:
    """Constants, radii and bounds for one data vector."""

    nu: float
    mu: float
    k1_norm: float
    C: float
    r: float
    r0: float
    M: float
    eta1_norm: float
    converges: bool
    order: int
    tail_bound: Optional[float]
    recon_bound: Optional[float]
    recon_margin: Optional[float]
    linearization_residual: Optional[float]
    Mcal: Optional[float]
    variant: str

    def to_dict(self):
        """Flat JSON-ready mapping; missing bounds read ``"inapplicable"``."""
        out = asdict(self)
        for key in ("tail_bound", "recon_bound"):
            if out[key] is None:
                out[key] = "inapplicable"
        return out


def build_report(family, k1_inv, phi, N, variant="theorem", eta_true=None, coeffs=None):
    """Assemble a :class:`ConvergenceReport`.

    With ``eta_true`` (synthetic runs) the reconstruction bound is evaluated
    using the order-N partial sum as the series limit; ``coeffs`` may be passed
    to avoid recomputing the inverse series.
    """
    phi = family.check_data(phi)
    C, r, r0 = theorem1_radius(family.nu, family.mu, k1_inv.operator_norm, variant)
    eta1_norm = family.norm_x(k1_inv.matrix @ phi)
    converges = eta1_norm < r
    tb = tail_bound(eta1_norm, r, r0, N) if converges else None

    recon = margin = residual = Mcal = None
    if eta_true is not None:
        eta_true = family.check_field(eta_true)
        if coeffs is None:
            coeffs = inverse_coefficients(family, k1_inv, phi, N, allow_high_order=True)
        eta_sum = reconstruct(coeffs, min(N, coeffs.order))
        Mcal = max(family.norm_x(eta_true), family.norm_x(eta_sum))
        residual = family.norm_x(eta_true - k1_inv.matrix @ (family.k1_matrix() @ eta_true))
        bound = reconstruction_bound(family.nu, family.mu, k1_inv.operator_norm, Mcal, residual)
        recon, margin = bound.value, bound.margin

    return ConvergenceReport(
        nu=family.nu,
        mu=family.mu,
        k1_norm=k1_inv.operator_norm,
        C=C,
        r=r,
        r0=r0,
        M=r0,
        eta1_norm=eta1_norm,
        converges=bool(converges),
        order=int(N),
        tail_bound=tb,
        recon_bound=recon,
        recon_margin=margin,
        linearization_residual=residual,
        Mcal=Mcal,
        variant=variant,
    )


def empirical_ratio(term_norms):
    """Largest ratio of successive nonzero term norms."""
    norms = np.asarray(term_norms, dtype=float)
    mask = norms[:-1] > 0
    if not np.any(mask):
        return 0.0
    return float(np.max(norms[1:][mask] / norms[:-1][mask]))


def error_plateau(errors, rtol=1e-9):
    """First order after which the error stays within ``rtol`` of its value there.

    ``errors[K - 1]`` is the error of the order-K partial sum. Returns
    ``(plateau_order, nonincreasing)`` where ``nonincreasing`` tells whether
    the errors up to the plateau never grow (up to roundoff).
    """
    errors = np.asarray(errors, dtype=float)
    n = len(errors)
    plateau = n
    for K in range(n):
        if np.all(np.abs(errors[K:] - errors[K]) <= rtol * errors[K]):
            plateau = K + 1
            break
    head = errors[:plateau]
    slack = 1e-12 * np.maximum(head[:-1], 1e-300)
    nonincreasing = bool(np.all(head[1:] <= head[:-1] + slack))
    return plateau, nonincreasing
