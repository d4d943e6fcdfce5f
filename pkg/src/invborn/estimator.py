"""scikit-learn style wrapper around the inverse Born series."""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .convergence import build_report
from .exceptions import DimensionError
from .inverse import exact_inverse, inverse_coefficients, reconstruct, weighted_pseudoinverse
from .series import forward_series


class InverseBornSeries(TransformerMixin, BaseEstimator):
    """Map data vectors to contrasts with the inverse Born series.

    Parameters
    ----------
    family : OperatorFamily
        Forward operators ``K_m``.
    order : int, default=6
        Number of inverse-series terms.
    method : {'truncated-svd', 'tikhonov', 'exact'}, default='truncated-svd'
        Construction of the linearized inverse. ``exact`` requires a square,
        invertible ``K_1``.
    threshold : float, default=1e-3
        Relative singular-value cutoff or Tikhonov parameter.
    forward_order : int, default=None
        Truncation used by :meth:`inverse_transform`; ``family.max_order``
        when None.
    variant : {'theorem', 'proposition'}, default='theorem'
        Constant used for the convergence radius.

    Attributes
    ----------
    k1_inv_ : LinearizedInverse
    radius_ : float
        Convergence radius for ``||K1inv phi||``.
    coefficients_ : list of InverseCoefficients
        Memo tables of the last :meth:`transform` call, one per row.
    """

    def __init__(self, family=None, order=6, method="truncated-svd", threshold=1e-3, forward_order=None, variant="theorem"):
        self.family = family
        self.order = order
        self.method = method
        self.threshold = threshold
        self.forward_order = forward_order
        self.variant = variant

    def fit(self, X=None, y=None):
        """Build the linearized inverse. ``X``, if given, only has its width checked."""
        if self.family is None:
            raise ValueError("InverseBornSeries needs an operator family")
        if X is not None:
            X = check_array(X)
            self._check_width(X, self.family.dim_y)
        if self.method == "exact":
            self.k1_inv_ = exact_inverse(self.family)
        else:
            self.k1_inv_ = weighted_pseudoinverse(
                self.family.k1_matrix(), self.family.weights_x, self.family.weights_y, self.method, self.threshold
            )
        report = build_report(self.family, self.k1_inv_, np.zeros(self.family.dim_y), 1, self.variant)
        self.radius_ = report.r
        self.n_features_in_ = self.family.dim_y
        return self

    @staticmethod
    def _check_width(X, width):
        if X.shape[1] != width:
            raise DimensionError(f"expected {width} columns, got {X.shape[1]}")

    def transform(self, X):
        """Reconstruct one contrast per row of data ``X``."""
        check_is_fitted(self, "k1_inv_")
        X = check_array(X)
        self._check_width(X, self.family.dim_y)
        self.coefficients_ = [
            inverse_coefficients(self.family, self.k1_inv_, row, self.order, allow_high_order=True) for row in X
        ]
        return np.array([reconstruct(c) for c in self.coefficients_])

    def inverse_transform(self, X):
        """Forward Born series of each contrast row of ``X``."""
        check_is_fitted(self, "k1_inv_")
        X = check_array(X)
        self._check_width(X, self.family.dim_x)
        order = self.family.max_order if self.forward_order is None else self.forward_order
        return np.array([forward_series(self.family, row, order) for row in X])

    def report(self, phi, eta_true=None):
        """Convergence report for a single data vector."""
        check_is_fitted(self, "k1_inv_")
        return build_report(self.family, self.k1_inv_, phi, self.order, self.variant, eta_true=eta_true)
