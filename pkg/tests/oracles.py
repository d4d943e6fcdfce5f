"""Independent reference computations used by the tests.

None of these call into the recursions they check.
"""

import itertools
import math
from fractions import Fraction

import numpy as np


def lagrange_inverse_coefficients(coeffs, order):
    """Series reversion by Lagrange inversion in exact rational arithmetic.

    ``coeffs`` are ``c_1, c_2, ...`` of ``f(x) = sum c_n x^n``; returns
    ``d_1..d_order`` with ``f^{-1}(y) = sum d_m y^m`` using
    ``d_m = [x^(m-1)] (x / f(x))^m / m``.
    """
    c = [Fraction(x) for x in coeffs] + [Fraction(0)] * order
    g = c[:order]  # f(x)/x = c1 + c2 x + ...
    h = [Fraction(0)] * order  # 1/g
    h[0] = 1 / g[0]
    for n in range(1, order):
        h[n] = -sum(g[k] * h[n - k] for k in range(1, n + 1)) / g[0]
    out = []
    power = [Fraction(1)] + [Fraction(0)] * (order - 1)
    for m in range(1, order + 1):
        power = [sum(power[k] * h[n - k] for k in range(n + 1)) for n in range(order)]
        out.append(power[m - 1] / m)
    return out


def brute_compositions(m, n):
    return sorted(t for t in itertools.product(range(1, m + 1), repeat=n) if sum(t) == m)


def nested_loop_k2(k, sources, detectors, centers, h, self_value, eta1, eta2):
    """Order-2 diffuse-wave data by explicit quadruple loop."""
    w = h**3

    def G(x, y):
        d = math.dist(x, y)
        return math.exp(-k * d) / (4 * math.pi * d)

    out = np.zeros((len(sources), len(detectors)))
    for s, x in enumerate(sources):
        for d, y in enumerate(detectors):
            total = 0.0
            for j, zj in enumerate(centers):
                for l, zl in enumerate(centers):
                    mid = self_value if j == l else G(zj, zl)
                    total += G(x, zj) * w * eta1[j] * mid * w * eta2[l] * G(zl, y)
            out[s, d] = -(k**4) * total
    return out.ravel()


def weighted_power_norm(matrix, weights_in, weights_out, iters=500, seed=0):
    """Operator norm between weighted spaces by power iteration on T^T T."""
    t = np.sqrt(weights_out)[:, None] * matrix / np.sqrt(weights_in)[None, :]
    v = np.random.default_rng(seed).standard_normal(t.shape[1])
    v /= np.linalg.norm(v)
    est = 0.0
    for _ in range(iters):
        v = t.T @ (t @ v)
        est = np.linalg.norm(v)
        v /= est
    return math.sqrt(est)
