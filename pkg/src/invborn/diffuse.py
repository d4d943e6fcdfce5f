"""Born series for diffuse waves in a ball, discretized on a voxel grid.

The contrast lives on cubic voxels inside the ball ``B_a``; sources and
detectors sit on the sphere ``|x| = R``. The m-th forward operator is

    K_m(eta_1..eta_m)(x, y) = -(-k^2)^m  sum_{j_1..j_m} G(x, z_1) w eta_1(z_1) G(z_1, z_2) w eta_2(z_2)
                                         ... w eta_m(z_m) G(z_m, y)

with voxel volume ``w = h^3`` and ``G(x, y) = exp(-k|x-y|) / (4 pi |x-y|)``.
The singular self-term ``G(z_i, z_i)`` is replaced by the average of ``G``
over a sphere with the voxel's volume.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .exceptions import GeometryError, NonInvertibleError
from .inverse import weighted_pseudoinverse
from .series import OperatorFamily, weighted_norm

GOLDEN_ANGLE = math.pi * (3.0 - math.sqrt(5.0))
QUADRATURE_SLACK = 0.05


def green(k, x, y):
    """Diffusion Green's function ``exp(-k r) / (4 pi r)`` with ``r = |x - y|``."""
    d = np.linalg.norm(np.asarray(x, dtype=float) - np.asarray(y, dtype=float), axis=-1)
    if np.any(d == 0):
        raise ValueError("Green's function is singular at coincident points")
    return np.exp(-k * d) / (4.0 * math.pi * d)


def _green_matrix(k, points_a, points_b):
    d = cdist(points_a, points_b)
    with np.errstate(divide="ignore"):
        return np.exp(-k * d) / (4.0 * math.pi * d)


def fibonacci_sphere(n, radius, offset=0.0):
    """``n`` near-uniform points on a sphere (Fibonacci lattice)."""
    i = np.arange(n)
    z = 1.0 - (2.0 * i + 1.0) / n
    rho = np.sqrt(np.clip(1.0 - z * z, 0.0, None))
    theta = GOLDEN_ANGLE * i + offset
    pts = np.column_stack([rho * np.cos(theta), rho * np.sin(theta), z])
    return radius * pts


@dataclass(frozen=True)
class Geometry:
    """Voxelized ball and surface quadrature points."""

    a: float
    R: float
    h: float
    voxel_centers: np.ndarray
    sources: np.ndarray
    detectors: np.ndarray

    @property
    def voxel_weight(self):
        return self.h**3

    @property
    def source_weight(self):
        return 4.0 * math.pi * self.R**2 / len(self.sources)

    @property
    def detector_weight(self):
        return 4.0 * math.pi * self.R**2 / len(self.detectors)

    @property
    def n_voxels(self):
        return len(self.voxel_centers)

    @property
    def ball_volume(self):
        return 4.0 / 3.0 * math.pi * self.a**3


def build_geometry(a, R, voxels_per_axis, n_sources, n_detectors, coincident=False):
    """Voxel grid on ``[-a, a]^3`` restricted to ``|z| < a`` plus surface points.

    Detectors use an azimuthally rotated Fibonacci lattice unless
    ``coincident`` is set, in which case they equal the sources.
    """
    if not a > 0:
        raise GeometryError(f"ball radius must be positive, got {a}")
    if not R > a:
        raise GeometryError(f"measurement radius R={R} must exceed a={a}")
    if voxels_per_axis < 2:
        raise GeometryError(f"voxels_per_axis must be >= 2, got {voxels_per_axis}")
    if n_sources < 1 or n_detectors < 1:
        raise GeometryError("need at least one source and one detector")
    h = 2.0 * a / voxels_per_axis
    ticks = -a + h * (np.arange(voxels_per_axis) + 0.5)
    gx, gy, gz = np.meshgrid(ticks, ticks, ticks, indexing="ij")
    centers = np.column_stack([gx.ravel(), gy.ravel(), gz.ravel()])
    centers = centers[np.linalg.norm(centers, axis=1) < a]
    sources = fibonacci_sphere(n_sources, R)
    if coincident:
        detectors = sources.copy()
    else:
        detectors = fibonacci_sphere(n_detectors, R, offset=GOLDEN_ANGLE / 2.0)
    return Geometry(float(a), float(R), h, centers, sources, detectors)


def self_term(k, h):
    """Average of ``G(0, .)`` over a sphere of volume ``h^3``.

    ``[1 - exp(-k rho)(1 + k rho)] / (k^2 h^3)`` with ``rho = (3 h^3 / 4 pi)^(1/3)``.
    """
    vol = h**3
    rho = (3.0 * vol / (4.0 * math.pi)) ** (1.0 / 3.0)
    x = k * rho
    if x < 1e-3:
        # alternating series of 1 - e^{-x}(1+x), divided by x^2/2
        return rho**2 / (2.0 * vol) * (1.0 - 2.0 * x / 3.0 + x**2 / 4.0 - x**3 / 15.0)
    if x < 0.5:
        # closed form cancels badly here; sum 2 (n-1) (-x)^(n-2) / n! to convergence
        total, term, n = 0.0, 1.0, 2
        while abs(term) > 1e-17 * abs(total) or n == 2:
            term = 2.0 * (n - 1) * (-x) ** (n - 2) / math.factorial(n)
            total += term
            n += 1
        return rho**2 / (2.0 * vol) * total
    return (1.0 - math.exp(-x) * (1.0 + x)) / (k * k * vol)


def nu_mu_constants(k, a, R, ball_volume=None):
    """Analytic bound constants of the diffuse-wave forward operators.

    ``nu = k^2 |B_a|^(1/2) R/(16 pi a) log|(R^2+a^2)/(R^2-a^2)|`` and
    ``mu = k^2 sqrt(a / (4 pi))``.
    """
    if not R > a:
        raise GeometryError(f"measurement radius R={R} must exceed a={a}")
    if ball_volume is None:
        ball_volume = 4.0 / 3.0 * math.pi * a**3
    surface = R / (16.0 * math.pi * a) * math.log(abs((R * R + a * a) / (R * R - a * a)))
    nu = k * k * math.sqrt(ball_volume) * surface
    mu = k * k * math.sqrt(a / (4.0 * math.pi))
    return nu, mu


class DiffuseWaveFamily(OperatorFamily):
    """Discretized diffuse-wave forward operators.

    Attributes
    ----------
    A : ndarray, shape (n_sources, n_voxels)
        ``G(x_s, z_j)``.
    B : ndarray, shape (n_voxels, n_voxels)
        ``G(z_i, z_j)`` with the cell-averaged diagonal.
    C : ndarray, shape (n_voxels, n_detectors)
        ``G(z_j, y_d)``.

    Data vectors are flattened source-major: index ``s * n_detectors + d``.
    """

    def __init__(self, geometry, k, A, B, C, max_order=12):
        nu, mu = nu_mu_constants(k, geometry.a, geometry.R, geometry.ball_volume)
        ns, nd = len(geometry.sources), len(geometry.detectors)
        super().__init__(
            geometry.n_voxels,
            ns * nd,
            max_order,
            nu,
            mu,
            weights_x=geometry.voxel_weight,
            weights_y=geometry.source_weight * geometry.detector_weight,
            bound_slack=QUADRATURE_SLACK,
        )
        self.geometry = geometry
        self.k = float(k)
        for mat in (A, B, C):
            mat.setflags(write=False)
        self.A, self.B, self.C = A, B, C
        self.n_sources, self.n_detectors = ns, nd

    def sign(self, m):
        return -((-1.0) ** m)

    def _apply(self, m, etas):
        w = self.geometry.voxel_weight
        k2 = self.k * self.k
        left = self.A * (w * k2 * etas[0])[None, :]
        for e in etas[1:]:
            left = (left @ self.B) * (w * k2 * e)[None, :]
        return self.sign(m) * (left @ self.C).ravel()

    def k1_matrix(self):
        w = self.geometry.voxel_weight
        k2 = self.k * self.k
        # column j: outer(A[:, j], C[j, :]) flattened source-major
        return k2 * w * (self.A[:, None, :] * self.C.T[None, :, :]).reshape(-1, self.dim_x)

    def data_matrix(self, phi):
        """Reshape a data vector to ``(n_sources, n_detectors)``."""
        return np.asarray(phi).reshape(self.n_sources, self.n_detectors)


def assemble_family(geometry, k, max_order=12):
    """Fill the Green's-function matrices for ``geometry`` at wavenumber ``k``."""
    if k < 0:
        raise ValueError(f"k must be nonnegative, got {k}")
    z = geometry.voxel_centers
    A = _green_matrix(k, geometry.sources, z)
    B = _green_matrix(k, z, z)
    np.fill_diagonal(B, self_term(k, geometry.h))
    C = _green_matrix(k, z, geometry.detectors)
    return DiffuseWaveFamily(geometry, k, A, B, C, max_order=max_order)


@dataclass(frozen=True)
class PseudoinverseConfig:
    """Regularization of the linearized inverse.

    ``method`` is ``'truncated-svd'`` (``threshold`` = relative cutoff in
    (0, 1]) or ``'tikhonov'`` (``threshold`` = lambda > 0).
    """

    method: str = "truncated-svd"
    threshold: float = 1e-3

    def __post_init__(self):
        if self.method == "truncated-svd":
            if not 0.0 < self.threshold <= 1.0:
                raise ValueError(f"truncation threshold must be in (0, 1], got {self.threshold}")
        elif self.method == "tikhonov":
            if not self.threshold > 0.0:
                raise ValueError(f"Tikhonov parameter must be positive, got {self.threshold}")
        else:
            raise ValueError(f"unknown pseudoinverse method {self.method!r}")


def k1_pseudoinverse(family, config=PseudoinverseConfig()):
    """Weighted regularized pseudoinverse of the family's linear term."""
    k1 = family.k1_matrix()
    if not np.any(k1):
        raise NonInvertibleError("K_1 is identically zero")
    return weighted_pseudoinverse(k1, family.weights_x, family.weights_y, config.method, config.threshold)


def kernel_bound_check(family, max_m=3, n_samples=100, seed=0, slack=QUADRATURE_SLACK):
    """Largest observed ``||K_m(eta_1..eta_m)|| / (nu mu^(m-1))`` over random unit fields.

    Half the samples are nonnegative fields, which drive the positive kernels
    hardest. Returns ``{m: {"max_ratio": ..., "flagged": ...}}``.
    """
    rng = np.random.default_rng(seed)
    out = {}
    for m in range(1, max_m + 1):
        family.check_order(m)
        scale = family.nu * family.mu ** (m - 1)
        worst = 0.0
        for trial in range(n_samples):
            etas = []
            for _ in range(m):
                e = rng.standard_normal(family.dim_x)
                if trial % 2 == 0:
                    e = np.abs(e)
                etas.append(e / family.norm_x(e))
            worst = max(worst, family.norm_y(family.apply(m, *etas)) / scale)
        out[m] = {"max_ratio": worst, "flagged": bool(worst > 1.0 + slack)}
    return out


def surface_green_norms(family):
    """``||G(z, .)||^2`` over the detector sphere for every voxel center ``z``."""
    return (family.C**2).sum(axis=1) * family.geometry.detector_weight


def volume_green_norms(family):
    """``||G(z, .)||`` over the ball for every voxel center ``z``."""
    return np.sqrt((family.B**2).sum(axis=1) * family.geometry.voxel_weight)


def paint_inclusions(geometry, inclusions):
    """Piecewise-constant contrast from spherical inclusions.

    ``inclusions`` is an iterable of ``(center, radius, contrast)``; overlaps add.
    """
    eta = np.zeros(geometry.n_voxels)
    for center, radius, contrast in inclusions:
        inside = np.linalg.norm(geometry.voxel_centers - np.asarray(center, dtype=float), axis=1) < radius
        eta[inside] += contrast
    return eta


def field_norm(geometry, eta):
    return weighted_norm(eta, geometry.voxel_weight)
