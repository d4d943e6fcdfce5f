"""Multilinear operator families and the forward Born series.

A family is a sequence of m-multilinear maps ``K_m : X^m -> Y`` between
finite-dimensional spaces carrying quadrature weights. Norms are weighted
l2 norms, ``||v|| = sqrt(sum_i w_i v_i**2)``, so that a discretized L2 space
keeps its continuum scaling.
"""

import math

import numpy as np

from .exceptions import DimensionError, DivergentTailError, NonInvertibleError, UnsupportedOrderError


def weighted_norm(values, weights):
    """Weighted l2 norm ``sqrt(sum w * v**2)``."""
    values = np.asarray(values, dtype=float)
    return float(np.sqrt(np.sum(weights * values * values)))


class OperatorFamily:
    """Family of m-multilinear maps with declared bound constants.

    Subclasses implement :meth:`_apply`. The declared constants promise

        ||K_m(eta_1, ..., eta_m)||_Y <= nu * mu**(m-1) * prod ||eta_i||_X * (1 + bound_slack)

    for every ``m <= max_order``.

    Parameters
    ----------
    dim_x, dim_y : int
        Dimensions of the discretized parameter and data spaces.
    max_order : int
        Largest order for which ``apply`` is defined.
    nu, mu : float
        First-order bound constant and geometric growth constant.
    weights_x, weights_y : array_like, optional
        Positive quadrature weights; default to ones.
    bound_slack : float
        Relative tolerance on the declared bound (0 for exact families).
    """

    def __init__(self, dim_x, dim_y, max_order, nu, mu, weights_x=None, weights_y=None, bound_slack=0.0):
        if dim_x < 1 or dim_y < 1:
            raise DimensionError(f"dimensions must be positive, got ({dim_x}, {dim_y})")
        if max_order < 1:
            raise UnsupportedOrderError(f"max_order must be >= 1, got {max_order}")
        if nu < 0 or mu < 0:
            raise ValueError("bound constants must be nonnegative")
        self.dim_x = int(dim_x)
        self.dim_y = int(dim_y)
        self.max_order = int(max_order)
        self.nu = float(nu)
        self.mu = float(mu)
        self.bound_slack = float(bound_slack)
        self.weights_x = self._check_weights(weights_x, self.dim_x)
        self.weights_y = self._check_weights(weights_y, self.dim_y)

    @staticmethod
    def _check_weights(weights, dim):
        if weights is None:
            return np.ones(dim)
        weights = np.broadcast_to(np.asarray(weights, dtype=float), (dim,)).copy()
        if np.any(weights <= 0):
            raise ValueError("quadrature weights must be strictly positive")
        weights.setflags(write=False)
        return weights

    def norm_x(self, eta):
        return weighted_norm(eta, self.weights_x)

    def norm_y(self, phi):
        return weighted_norm(phi, self.weights_y)

    def check_order(self, m):
        if m < 1 or m > self.max_order:
            raise UnsupportedOrderError(f"order {m} not in 1..{self.max_order}")

    def check_field(self, eta):
        eta = np.asarray(eta, dtype=float)
        if eta.shape != (self.dim_x,):
            raise DimensionError(f"expected field of length {self.dim_x}, got shape {eta.shape}")
        return eta

    def check_data(self, phi):
        phi = np.asarray(phi, dtype=float)
        if phi.shape != (self.dim_y,):
            raise DimensionError(f"expected data of length {self.dim_y}, got shape {phi.shape}")
        return phi

    def apply(self, m, *etas):
        """Evaluate ``K_m(etas[0], ..., etas[m-1])``."""
        self.check_order(m)
        if len(etas) != m:
            raise DimensionError(f"order {m} needs {m} arguments, got {len(etas)}")
        etas = [self.check_field(e) for e in etas]
        return self._apply(m, etas)

    def _apply(self, m, etas):
        raise NotImplementedError

    def k1_matrix(self):
        """Matrix of the linear term, shape ``(dim_y, dim_x)``."""
        eye = np.eye(self.dim_x)
        return np.column_stack([self._apply(1, [eye[:, j]]) for j in range(self.dim_x)])


class ScalarFamily(OperatorFamily):
    """One-dimensional family ``K_m(x_1, ..., x_m) = c_m x_1 ... x_m``.

    Coefficients past the supplied list are zero, so ``max_order`` may exceed
    ``len(coeffs)`` (the forward map is then a polynomial).
    """

    def __init__(self, coeffs, mu=1.0, max_order=None):
        coeffs = [float(c) for c in coeffs]
        if not coeffs or coeffs[0] == 0.0:
            raise NonInvertibleError("scalar family needs a nonzero linear coefficient")
        max_order = len(coeffs) if max_order is None else max_order
        nu = max(abs(c) / mu ** (m - 1) for m, c in enumerate(coeffs, start=1))
        super().__init__(1, 1, max_order, nu, mu)
        self.coeffs = tuple(coeffs)

    def coefficient(self, m):
        return self.coeffs[m - 1] if m <= len(self.coeffs) else 0.0

    def _apply(self, m, etas):
        out = self.coefficient(m)
        for e in etas:
            out = out * e[0]
        return np.array([out])


def make_scalar_family(coeffs, mu=1.0, max_order=None):
    """Scalar oracle family with ``K_m = c_m * x_1 ... x_m``."""
    return ScalarFamily(coeffs, mu=mu, max_order=max_order)


class MatrixProductFamily(OperatorFamily):
    """Finite-dimensional family built from entrywise products of matrix images.

    ``K_1`` is a plain matrix. For ``m >= 2``::

        K_m(eta_1, ..., eta_m) = s_m * P_m @ ((A_m1 @ eta_1) * ... * (A_mm @ eta_m))

    with ``s_m`` chosen so that ``s_m ||P_m|| prod ||A_mj|| = nu mu**(m-1)``.
    Since ``||u * v||_2 <= ||u||_2 ||v||_2`` the declared bound is rigorous.
    """

    def __init__(self, k1, projections, factors, mu):
        k1 = np.asarray(k1, dtype=float)
        dim_y, dim_x = k1.shape
        nu = float(np.linalg.norm(k1, 2))
        super().__init__(dim_x, dim_y, len(factors) + 1, nu, mu)
        self.k1 = k1
        self.projections = [np.asarray(p, dtype=float) for p in projections]
        self.factors = [[np.asarray(a, dtype=float) for a in fs] for fs in factors]
        self.scales = []
        for m, (p, fs) in enumerate(zip(self.projections, self.factors), start=2):
            bound = np.linalg.norm(p, 2) * math.prod(np.linalg.norm(a, 2) for a in fs)
            self.scales.append(nu * mu ** (m - 1) / bound)

    def _apply(self, m, etas):
        if m == 1:
            return self.k1 @ etas[0]
        fs = self.factors[m - 2]
        prod = fs[0] @ etas[0]
        for a, e in zip(fs[1:], etas[1:]):
            prod = prod * (a @ e)
        return self.scales[m - 2] * (self.projections[m - 2] @ prod)

    def k1_matrix(self):
        return self.k1.copy()


def _haar_columns(rng, rows, cols):
    q, r = np.linalg.qr(rng.standard_normal((rows, cols)))
    return q * np.sign(np.diag(r))[None, :]


def make_random_matrix_family(dim_x, dim_y, max_order, seed, mu=1.0, singular_range=(0.5, 2.0)):
    """Seeded random :class:`MatrixProductFamily`.

    ``K_1 = U diag(s) V^T`` with Haar-random orthonormal factors and singular
    values drawn uniformly from ``singular_range`` (lower end at least 0.1).
    Higher orders use Gaussian factor and projection matrices.
    """
    if dim_y < dim_x:
        raise DimensionError(f"need dim_y >= dim_x, got dim_x={dim_x}, dim_y={dim_y}")
    lo, hi = singular_range
    if lo < 0.1 or hi < lo:
        raise ValueError(f"singular_range must satisfy 0.1 <= lo <= hi, got {singular_range}")
    rng = np.random.default_rng(seed)
    u = _haar_columns(rng, dim_y, dim_x)
    v = _haar_columns(rng, dim_x, dim_x)
    k1 = (u * rng.uniform(lo, hi, dim_x)[None, :]) @ v.T
    projections, factors = [], []
    for m in range(2, max_order + 1):
        projections.append(rng.standard_normal((dim_y, dim_y)))
        factors.append([rng.standard_normal((dim_y, dim_x)) for _ in range(m)])
    return MatrixProductFamily(k1, projections, factors, mu)


def forward_series(family, eta, order):
    """Truncated forward Born series ``sum_{m=1}^{order} K_m(eta, ..., eta)``."""
    family.check_order(order)
    eta = family.check_field(eta)
    total = np.zeros(family.dim_y)
    for m in range(1, order + 1):
        total = total + family.apply(m, *([eta] * m))
    return total


def forward_partial_sums(family, eta, order):
    """All partial sums ``S_1, ..., S_order`` as rows of an array."""
    family.check_order(order)
    eta = family.check_field(eta)
    sums = np.zeros((order, family.dim_y))
    total = np.zeros(family.dim_y)
    for m in range(1, order + 1):
        total = total + family.apply(m, *([eta] * m))
        sums[m - 1] = total
    return sums


def forward_tail_bound(nu, mu, eta_norm, order):
    """Bound on ``sum_{m > order} ||K_m(eta, ..., eta)||`` from the family constants.

    Equals ``nu * eta_norm * (mu * eta_norm)**order / (1 - mu * eta_norm)``.
    """
    q = mu * eta_norm
    if q >= 1.0:
        raise DivergentTailError(f"mu * ||eta|| = {q} >= 1, forward series may diverge")
    return nu * eta_norm * q**order / (1.0 - q)
