"""Inverse Born series: recursions for the inverse operators and reconstruction.

The memoized recursion computes ``K_m^inv(phi)`` (written ``terms[m]``) from

    terms[1] = P phi
    terms[m] = -P sum_{n=2}^{m} sum_{i_1+...+i_n=m} K_n(terms[i_1], ..., terms[i_n])

where ``P`` is a (regularized) left inverse of ``K_1``. Only the vectors
``terms[j]`` are stored. The classical recursion is kept for cross-checking;
it needs the inverse operators off the diagonal and costs far more.
"""

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .exceptions import (
    CostGuardError,
    DimensionError,
    EmptyDomainError,
    NonInvertibleError,
    UnsupportedOrderError,
)
from .series import weighted_norm

DEFAULT_MAX_ORDER = 12
CLASSICAL_MAX_ORDER = 8


def iter_compositions(m, n):
    """Yield the compositions of ``m`` into ``n`` positive parts in lexicographic order."""
    if n < 1 or n > m:
        raise EmptyDomainError(f"no compositions of {m} into {n} positive parts")
    return _compositions(m, n)


def _compositions(m, n):
    if n == 1:
        yield (m,)
        return
    for first in range(1, m - n + 2):
        for rest in _compositions(m - first, n - 1):
            yield (first,) + rest


def compositions(m, n):
    """List of all n-tuples of positive integers summing to ``m``, lexicographic."""
    return list(iter_compositions(m, n))


@dataclass(frozen=True)
class LinearizedInverse:
    """Matrix realizing the first inverse operator, a left inverse of ``K_1``.

    Attributes
    ----------
    matrix : ndarray, shape (dim_x, dim_y)
    operator_norm : float
        Norm between the weighted data and field spaces.
    regularization : dict
        Method and parameter used to build ``matrix``.
    """

    matrix: np.ndarray
    operator_norm: float
    regularization: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.operator_norm > 0:
            raise NonInvertibleError("linearized inverse has zero norm")

    def __call__(self, phi):
        return self.matrix @ phi


def weighted_matrix_norm(matrix, weights_in, weights_out):
    """Operator norm of ``matrix`` from ``(R^n, weights_in)`` to ``(R^p, weights_out)``."""
    scaled = np.sqrt(weights_out)[:, None] * matrix / np.sqrt(weights_in)[None, :]
    return float(np.linalg.norm(scaled, 2))


def weighted_pseudoinverse(k1, weights_x, weights_y, method="truncated-svd", threshold=1e-3):
    """Regularized pseudoinverse of ``k1`` in weighted inner products.

    ``k1`` maps fields (weights ``weights_x``) to data (weights ``weights_y``).
    With ``Wx``, ``Wy`` the diagonal weight matrices, the SVD is taken of
    ``Wy^(1/2) k1 Wx^(-1/2) = U diag(s) V^T`` and the inverse is
    ``Wx^(-1/2) V diag(f(s)) U^T Wy^(1/2)``.

    Parameters
    ----------
    method : {'truncated-svd', 'tikhonov', 'none'}
        ``truncated-svd`` keeps ``s >= threshold * s_max`` and uses ``f = 1/s``;
        ``tikhonov`` uses ``f = s / (s**2 + threshold**2)``; ``none`` keeps every
        nonzero singular value.
    threshold : float
        Relative cutoff in (0, 1] or Tikhonov parameter > 0.
    """
    k1 = np.asarray(k1, dtype=float)
    weights_x = np.asarray(weights_x, dtype=float)
    weights_y = np.asarray(weights_y, dtype=float)
    sx, sy = np.sqrt(weights_x), np.sqrt(weights_y)
    u, s, vt = np.linalg.svd(sy[:, None] * k1 / sx[None, :], full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        raise NonInvertibleError("K_1 is identically zero")
    if method == "truncated-svd":
        if not 0.0 < threshold <= 1.0:
            raise ValueError(f"truncation threshold must be in (0, 1], got {threshold}")
        keep = s >= threshold * s[0]
        filt = np.where(keep, 1.0 / np.where(keep, s, 1.0), 0.0)
    elif method == "tikhonov":
        if not threshold > 0:
            raise ValueError(f"Tikhonov parameter must be positive, got {threshold}")
        filt = s / (s**2 + threshold**2)
    elif method == "none":
        keep = s > s[0] * max(k1.shape) * np.finfo(float).eps
        filt = np.where(keep, 1.0 / np.where(keep, s, 1.0), 0.0)
    else:
        raise ValueError(f"unknown pseudoinverse method {method!r}")
    matrix = (vt.T * filt[None, :]) @ u.T
    matrix = matrix / sx[:, None] * sy[None, :]
    regularization = {
        "method": method,
        "threshold": float(threshold),
        "rank": int(np.count_nonzero(filt)),
        "sigma_max": float(s[0]),
    }
    return LinearizedInverse(matrix, float(filt.max()), regularization)


def exact_inverse(family):
    """Unregularized inverse of a square invertible ``K_1``."""
    k1 = family.k1_matrix()
    if k1.shape[0] != k1.shape[1]:
        raise DimensionError(f"exact inverse needs square K_1, got {k1.shape}")
    try:
        matrix = np.linalg.inv(k1)
    except np.linalg.LinAlgError as exc:
        raise NonInvertibleError(str(exc)) from exc
    norm = weighted_matrix_norm(matrix, family.weights_y, family.weights_x)
    return LinearizedInverse(matrix, norm, {"method": "exact"})


@dataclass(frozen=True)
class InverseCoefficients:
    """Memo table of ``K_1^inv(phi), ..., K_N^inv(phi)``.

    ``terms`` has shape ``(order, dim_x)``; row ``m - 1`` holds the order-m
    term. ``term_norms`` are weighted norms in the field space.
    """

    terms: np.ndarray
    phi: np.ndarray
    term_norms: np.ndarray

    @property
    def order(self):
        return self.terms.shape[0]

    def term(self, m):
        return self.terms[m - 1]

    def partial_sums(self):
        """Rows ``eta^(1), ..., eta^(N)``."""
        return np.cumsum(self.terms, axis=0)


def _check_order(order, allow_high_order, ceiling=DEFAULT_MAX_ORDER):
    if order < 1:
        raise UnsupportedOrderError(f"inverse order must be >= 1, got {order}")
    if order > ceiling and not allow_high_order:
        raise CostGuardError(f"order {order} exceeds the cost ceiling {ceiling}; pass allow_high_order=True")


def recursion_term(family, k1_inv, terms, m):
    """Order-m term of the memoized recursion from the stored lower-order terms.

    ``terms[j - 1]`` must hold the order-j term for ``j < m``.
    """
    if m == 1:
        raise ValueError("order 1 is the pseudoinverse itself")
    acc = np.zeros(family.dim_y)
    for n in range(2, m + 1):
        if n > family.max_order:
            raise UnsupportedOrderError(f"family defines K_n only up to n={family.max_order}, need n={n}")
        for comp in iter_compositions(m, n):
            acc = acc + family.apply(n, *[terms[i - 1] for i in comp])
    return -(k1_inv.matrix @ acc)


def inverse_coefficients(family, k1_inv, phi, order, allow_high_order=False):
    """Memoized inverse Born series terms up to ``order``.

    Each ``terms[j]`` is computed once and reused in every later order.
    Summation runs over ``n`` ascending, compositions lexicographic.
    """
    _check_order(order, allow_high_order)
    phi = family.check_data(phi)
    terms = np.zeros((order, family.dim_x))
    terms[0] = k1_inv.matrix @ phi
    for m in range(2, order + 1):
        terms[m - 1] = recursion_term(family, k1_inv, terms, m)
    norms = np.array([weighted_norm(t, family.weights_x) for t in terms])
    return InverseCoefficients(terms, phi, norms)


def classical_inverse_coefficients(family, k1_inv, phi, order, max_order=CLASSICAL_MAX_ORDER):
    """Diagonal values of the inverse operators from the classical recursion.

    The classical form

        K_n^inv = -sum_{m<n} sum_{i_1+...+i_m=n} K_m^inv o (K_{i_1} x ... x K_{i_m}) o (K_1^inv)^{x n}

    evaluates lower inverse operators at mixed arguments. Those are produced
    by expanding the same formula with a list of arguments: the j-th block of
    consecutive slots feeds ``K_{i_j}``. Cost grows super-exponentially, hence
    the ``max_order`` guard.
    """
    if order > max_order:
        raise CostGuardError(f"classical recursion limited to order {max_order}, got {order}")
    _check_order(order, False)
    if order > family.max_order:
        raise UnsupportedOrderError(f"family defines K_n only up to n={family.max_order}, need n={order}")
    phi = family.check_data(phi)

    def evaluate(n, args):
        psi = [k1_inv.matrix @ a for a in args]
        if n == 1:
            return psi[0]
        acc = np.zeros(family.dim_x)
        for m in range(1, n):
            for comp in iter_compositions(n, m):
                inner, pos = [], 0
                for i in comp:
                    inner.append(family.apply(i, *psi[pos : pos + i]))
                    pos += i
                acc = acc + evaluate(m, inner)
        return -acc

    terms = np.array([evaluate(n, [phi] * n) for n in range(1, order + 1)])
    norms = np.array([weighted_norm(t, family.weights_x) for t in terms])
    return InverseCoefficients(terms, phi, norms)


def reconstruct(coeffs, order=None):
    """Partial sum ``eta^(K) = sum_{m=1}^{K} terms[m]``."""
    order = coeffs.order if order is None else order
    if not 1 <= order <= coeffs.order:
        raise UnsupportedOrderError(f"reconstruction order {order} not in 1..{coeffs.order}")
    total = np.zeros(coeffs.terms.shape[1])
    for m in range(order):
        total = total + coeffs.terms[m]
    return total


class MonitorVerdict(NamedTuple):
    status: str
    ratio: float


def _ratios(norms):
    norms = np.asarray(norms, dtype=float)
    prev, nxt = norms[:-1], norms[1:]
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.where(prev > 0, nxt / np.where(prev > 0, prev, 1.0), np.where(nxt > 0, np.inf, 0.0))
    return r


def divergence_monitor(term_norms, ratio_threshold=1.0):
    """Classify the behaviour of successive term norms.

    ``diverging`` when some three consecutive ratios ``||t_{m+1}|| / ||t_m||``
    are all at least ``ratio_threshold``; otherwise ``contracting`` together
    with the largest of the last three ratios.
    """
    if isinstance(term_norms, InverseCoefficients):
        term_norms = term_norms.term_norms
    if len(term_norms) < 3:
        raise UnsupportedOrderError("divergence monitor needs at least 3 terms")
    r = _ratios(term_norms)
    tail = r[-3:]
    for j in range(len(r) - 2):
        if np.all(r[j : j + 3] >= ratio_threshold):
            return MonitorVerdict("diverging", float(np.max(tail)))
    return MonitorVerdict("contracting", float(np.max(tail)))
