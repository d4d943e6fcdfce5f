"""Built-in oracle suites run by ``invborn selftest``.

Every suite takes the memoized recursion as a parameter so that a
deliberately broken implementation can be checked to fail.
"""

from dataclasses import dataclass

import mpmath
import numpy as np
from numpy.polynomial import polynomial as P

from .convergence import bloch_radii, reconstruction_bound, tail_bound, theorem1_radius
from .diffuse import assemble_family, build_geometry, kernel_bound_check, nu_mu_constants
from .inverse import classical_inverse_coefficients, exact_inverse, inverse_coefficients, reconstruct
from .series import forward_series, make_random_matrix_family, make_scalar_family

IDENTITY_MU = 4.0
IDENTITY_STEPS = (0.02, 0.01, 0.005)
IDENTITY_ORDER = 6


@dataclass
class Check:
    suite: str
    name: str
    passed: bool
    observed: object
    expected: str

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.suite}: {self.name} (observed {self.observed}; expected {self.expected})"


def scalar_inverse_coefficients(family, order, recursion=inverse_coefficients):
    """Power-series coefficients ``d_m`` of the inverse map (``terms[m]`` at phi = 1)."""
    k1_inv = exact_inverse(family)
    return recursion(family, k1_inv, np.array([1.0]), order).terms[:, 0]


def compose_truncated(outer, inner, order):
    """Coefficients (constant term first) of ``outer(inner(x))`` up to ``x**order``.

    Both inputs list coefficients of ``x**1, x**2, ...``.
    """
    inner_poly = np.concatenate([[0.0], inner[:order]])
    result = np.zeros(order + 1)
    power = np.array([1.0])
    for d in outer[:order]:
        power = P.polymul(power, inner_poly)[: order + 1]
        result[: len(power)] += d * power
    return result


def identity_exponent(family, eta, recursion=inverse_coefficients, steps=IDENTITY_STEPS, order=IDENTITY_ORDER):
    """Slope of log residual against log step for ``I(F(s eta)) - s eta``."""
    k1_inv = exact_inverse(family)
    residuals = []
    for s in steps:
        phi = forward_series(family, s * eta, order)
        coeffs = recursion(family, k1_inv, phi, order)
        residuals.append(family.norm_x(reconstruct(coeffs) - s * eta))
    slope = np.polyfit(np.log(steps), np.log(residuals), 1)[0]
    return float(slope), residuals


def identity_families(n_seeds=10):
    for seed in range(n_seeds):
        family = make_random_matrix_family(5, 5, IDENTITY_ORDER, seed, mu=IDENTITY_MU)
        eta = np.random.default_rng(1000 + seed).standard_normal(5)
        yield seed, family, eta / family.norm_x(eta)


def suite_scalar(recursion=inverse_coefficients):
    checks = []
    d = scalar_inverse_coefficients(make_scalar_family([1.0] * 10), 10, recursion)
    expected = np.array([(-1.0) ** (m - 1) for m in range(1, 11)])
    err = float(np.max(np.abs(d - expected) / np.abs(expected)))
    checks.append(Check("scalar", "eta/(1-eta) inverse coefficients", err <= 1e-12, f"{err:.3g}", "rel err <= 1e-12"))
    rng = np.random.default_rng(2024)
    for i, c1 in enumerate((1.0, 2.0, 1.0)):
        coeffs = np.concatenate([[c1], rng.uniform(-1.0, 1.0, 7)])
        family = make_scalar_family(coeffs)
        d = scalar_inverse_coefficients(family, 8, recursion)
        comp = compose_truncated(d, coeffs, 8)
        target = np.zeros(9)
        target[1] = 1.0
        err = float(np.max(np.abs(comp - target)))
        checks.append(Check("scalar", f"I o F identity, random family {i} (c1={c1:g})", err <= 1e-10, f"{err:.3g}", "abs err <= 1e-10"))
    return checks


def suite_identity(recursion=inverse_coefficients, n_seeds=10):
    checks = []
    for seed, family, eta in identity_families(n_seeds):
        slope, _ = identity_exponent(family, eta, recursion)
        checks.append(Check("identity", f"seed {seed} residual exponent", slope >= 6.8, f"{slope:.3f}", ">= 6.8"))
    return checks


def suite_equivalence(recursion=inverse_coefficients, n_seeds=10):
    checks = []
    cases = [("scalar eta/(1-eta)", make_scalar_family([1.0] * 6), np.array([0.3]))]
    for seed, family, eta in identity_families(n_seeds):
        cases.append((f"random seed {seed}", family, forward_series(family, 0.02 * eta, IDENTITY_ORDER)))
    for name, family, phi in cases:
        k1_inv = exact_inverse(family)
        memo = recursion(family, k1_inv, phi, 6).terms
        classic = classical_inverse_coefficients(family, k1_inv, phi, 6).terms
        scale = np.maximum(np.max(np.abs(classic), axis=1), np.finfo(float).tiny)
        err = float(np.max(np.max(np.abs(memo - classic), axis=1) / scale))
        checks.append(Check("equivalence", name, err <= 1e-10, f"{err:.3g}", "rel err <= 1e-10"))
    return checks


def suite_kernel_bounds(voxels_per_axis=8, n_points=32, n_samples=20):
    geometry = build_geometry(1.0, 2.0, voxels_per_axis, n_points, n_points)
    family = assemble_family(geometry, 1.0, max_order=3)
    checks = []
    for m, res in kernel_bound_check(family, 3, n_samples).items():
        checks.append(Check("kernel", f"m={m} bound ratio", not res["flagged"], f"{res['max_ratio']:.4g}", "<= 1.05"))
    return checks


def suite_formulas():
    with mpmath.workdps(40):
        return _formula_checks()


def _formula_checks():
    checks = []

    def close(name, got, want, tol=1e-9):
        want = float(want)
        ok = abs(got - want) <= tol * max(1.0, abs(want))
        checks.append(Check("formulas", name, ok, f"{got:.12g}", f"{want:.12g}"))

    for M in (1.0, 10.0):
        r, p = bloch_radii(M)
        root = mpmath.sqrt(4 * mpmath.mpf(M) ** 2 + 1)
        close(f"bloch r(M={M:g})", r, 1 / root)
        close(f"bloch P(M={M:g})", p, 1 / (2 * M + root))
    for prod, C in ((2.0, 2), (3.0, 3)):
        _, r, r0 = theorem1_radius(prod, 1.0, 1.0, "theorem")
        root = mpmath.sqrt(16 * mpmath.mpf(C) ** 2 + 1)
        close(f"theorem radius r (C={C})", r, (root - 4 * C) / 2)
        close(f"theorem radius r0 (C={C})", r0, 2 / root)
    _, r, _ = theorem1_radius(0.5, 1.0, 1.0, "proposition")
    close("proposition radius r (C=1)", r, (mpmath.sqrt(17) - 4) / 2)
    close("tail bound (0.9, M=0.2, N=5)", tail_bound(0.9, 1.0, 0.2, 5), mpmath.mpf("0.2") * mpmath.mpf("0.9") ** 6 / mpmath.mpf("0.1"))
    close("reconstruction bound", reconstruction_bound(1.0, 1.0, 1.0, 0.2, 0.1).value, mpmath.mpf("0.1") / (2 - 1 / mpmath.mpf("0.64")))
    nu, mu = nu_mu_constants(1.0, 1.0, 2.0)
    ref_nu = mpmath.sqrt(4 * mpmath.pi / 3) * 2 / (16 * mpmath.pi) * mpmath.log(mpmath.mpf(5) / 3)
    close("diffuse nu (k=1, a=1, R=2)", nu, ref_nu)
    close("diffuse mu (k=1, a=1, R=2)", mu, mpmath.sqrt(1 / (4 * mpmath.pi)))
    return checks


def run_selftest(recursion=inverse_coefficients):
    """Run every suite; returns the list of :class:`Check` results."""
    checks = []
    checks += suite_scalar(recursion)
    checks += suite_identity(recursion)
    checks += suite_equivalence(recursion)
    checks += suite_kernel_bounds()
    checks += suite_formulas()
    return checks


def selftest_passed(checks):
    return all(c.passed for c in checks)
