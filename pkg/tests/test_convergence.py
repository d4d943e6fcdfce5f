import math

import mpmath
import numpy as np
import pytest

from invborn.convergence import (
    bloch_radii,
    build_report,
    error_plateau,
    reconstruction_bound,
    tail_bound,
    theorem1_radius,
)
from invborn.exceptions import OutsideRadiusError
from invborn.inverse import divergence_monitor, exact_inverse, inverse_coefficients, reconstruct
from invborn.series import make_scalar_family


def geometric_family(nu, mu, order=12):
    """Scalar family with c_m = nu mu^(m-1), so (nu, mu) are sharp."""
    return make_scalar_family([nu * mu ** (m - 1) for m in range(1, order + 1)], mu=mu)


def test_geometric_family_constants_are_exact():
    fam = geometric_family(2.0, 1.5)
    assert fam.nu == 2.0 and fam.mu == 1.5


# --- closed forms -----------------------------------------------------------


def test_bloch_radii_examples():
    with mpmath.workdps(40):
        for M in (1.0, 10.0, 0.3):
            root = mpmath.sqrt(4 * mpmath.mpf(M) ** 2 + 1)
            r, p = bloch_radii(M)
            assert abs(r - float(1 / root)) <= 1e-12
            assert abs(p - float(1 / (2 * M + root))) <= 1e-12
            assert 0 < p < r < 1
    assert bloch_radii(1.0) == pytest.approx((0.4472135955, 0.2360679775), abs=1e-10)
    assert bloch_radii(10.0) == pytest.approx((0.0499376, 0.0249844), abs=1e-7)
    assert bloch_radii(1e-12) == pytest.approx((1.0, 1.0), abs=1e-11)


@pytest.mark.parametrize("M", [0.0, -1.0])
def test_bloch_radii_rejects_nonpositive(M):
    with pytest.raises(ValueError):
        bloch_radii(M)


def test_theorem1_radius_examples():
    C, r, r0 = theorem1_radius(1.0, 1.0, 1.0, "theorem")
    assert C == 2
    assert r == pytest.approx((math.sqrt(65) - 8) / 2, abs=1e-12)
    assert r == pytest.approx(0.0311288, abs=1e-7)
    assert r0 == pytest.approx(0.2480695, abs=1e-7)
    C, r, _ = theorem1_radius(3.0, 1.0, 1.0, "theorem")
    assert C == 3 and r == pytest.approx(0.0207973, abs=1e-7)
    C, r, _ = theorem1_radius(0.5, 2.0, 1.0, "proposition")
    assert C == 1 and r == pytest.approx((math.sqrt(17) - 4) / 4, abs=1e-14)
    assert theorem1_radius(0.5, 2.0, 1.0, "theorem")[0] == 2


@pytest.mark.parametrize("args", [(0, 1, 1), (1, 0, 1), (1, 1, 0), (-1, 1, 1)])
def test_theorem1_radius_rejects_nonpositive(args):
    with pytest.raises(ValueError):
        theorem1_radius(*args)


def test_theorem1_radius_unknown_variant():
    with pytest.raises(ValueError):
        theorem1_radius(1.0, 1.0, 1.0, "lemma")


def test_radius_monotonicity_sweep():
    mus = np.linspace(0.1, 5, 25)
    prods = np.linspace(0.5, 50, 40)
    for variant in ("theorem", "proposition"):
        for mu in mus:
            rs, r0s = zip(*[theorem1_radius(p, mu, 1.0, variant)[1:] for p in prods])
            assert np.all(np.diff(rs) <= 0) and np.all(np.diff(r0s) <= 0)
        for p in prods:
            rs, r0s = zip(*[theorem1_radius(p, mu, 1.0, variant)[1:] for mu in mus])
            assert np.all(np.diff(rs) < 0) and np.all(np.diff(r0s) > 0)


@pytest.mark.parametrize("C", [1.0, 2.0, 3.0, 17.5, 1e3, 1e6])
def test_cancellation_safe_radius(C):
    mu = 0.7
    _, r, _ = theorem1_radius(C, mu, 1.0, "proposition")
    with mpmath.workdps(60):
        ref = (mpmath.sqrt(16 * mpmath.mpf(C) ** 2 + 1) - 4 * C) / (2 * mu)
    assert abs(r - float(ref)) <= 1e-14 * float(ref)
    if C < 100:
        naive = (math.sqrt(16 * C * C + 1) - 4 * C) / (2 * mu)
        assert abs(r - naive) <= 1e-14 * max(1.0, r) * 1e3


def test_tail_bound_examples():
    assert tail_bound(0.0, 1.0, 1.0, 3) == 0.0
    assert tail_bound(0.5, 1.0, 1.0, 1) == pytest.approx(0.5, abs=1e-15)
    assert tail_bound(0.9, 1.0, 0.2, 5) == pytest.approx(1.062882, abs=1e-9)
    direct = sum(0.2 * 0.9**n for n in range(6, 2000))
    assert tail_bound(0.9, 1.0, 0.2, 5) == pytest.approx(direct, rel=1e-12)


def test_tail_bound_outside_radius():
    with pytest.raises(OutsideRadiusError):
        tail_bound(1.0, 1.0, 1.0, 2)


def test_tail_bound_decreases_in_order():
    values = [tail_bound(0.6, 1.0, 0.3, N) for N in range(1, 15)]
    assert np.all(np.diff(values) < 0)


def test_reconstruction_bound_examples():
    assert reconstruction_bound(1.0, 1.0, 0.5, 0.1, 0.0).value == 0.0
    assert reconstruction_bound(2.0, 3.0, 0.7, 0.0, 0.37).value == pytest.approx(0.37, rel=1e-15)
    b = reconstruction_bound(1.0, 1.0, 1.0, 0.2, 0.1)
    assert b.applicable and b.value == pytest.approx(0.1 / 0.4375, abs=1e-12)
    assert b.value == pytest.approx(0.228571, abs=1e-6)


def test_reconstruction_bound_inapplicable():
    limit = 1.0 - math.sqrt(0.5)
    b = reconstruction_bound(1.0, 1.0, 1.0, limit + 0.01, 0.1)
    assert not b.applicable
    assert b.margin == pytest.approx(-0.01, abs=1e-12)


def test_reconstruction_bound_rejects_nonpositive():
    with pytest.raises(ValueError):
        reconstruction_bound(0.0, 1.0, 1.0, 0.1, 0.1)


# --- reports and the sufficiency properties --------------------------------


def test_build_report_zero_data():
    fam = geometric_family(1.0, 1.0)
    rep = build_report(fam, exact_inverse(fam), np.array([0.0]), 6)
    assert rep.eta1_norm == 0 and rep.converges and rep.tail_bound == 0.0
    assert rep.to_dict()["recon_bound"] == "inapplicable"


def test_build_report_inside_radius_contracts():
    fam = geometric_family(1.0, 1.0)
    k1_inv = exact_inverse(fam)
    _, r, _ = theorem1_radius(1.0, 1.0, 1.0)
    phi = np.array([0.9 * r])
    rep = build_report(fam, k1_inv, phi, 12)
    assert rep.converges
    assert divergence_monitor(inverse_coefficients(fam, k1_inv, phi, 12)).status == "contracting"


def test_build_report_far_outside_radius():
    fam = geometric_family(1.0, 1.0)
    rep = build_report(fam, exact_inverse(fam), np.array([2.0]), 6)
    assert not rep.converges
    assert rep.to_dict()["tail_bound"] == "inapplicable"


def test_build_report_strict_comparison():
    fam = geometric_family(1.0, 1.0)
    _, r, _ = theorem1_radius(1.0, 1.0, 1.0)
    assert not build_report(fam, exact_inverse(fam), np.array([r]), 6).converges


def test_build_report_variants_differ_only_in_radius():
    fam = geometric_family(0.5, 1.0)
    k1_inv = exact_inverse(fam)
    a = build_report(fam, k1_inv, np.array([0.01]), 6, "theorem").to_dict()
    b = build_report(fam, k1_inv, np.array([0.01]), 6, "proposition").to_dict()
    changed = {k for k in a if a[k] != b[k]}
    assert changed <= {"C", "r", "r0", "M", "variant", "converges", "tail_bound"}
    assert {"C", "r", "variant"} <= changed


def test_build_report_synthetic_bound():
    fam = geometric_family(1.0, 1.0)
    k1_inv = exact_inverse(fam)
    rep = build_report(fam, k1_inv, np.array([0.01]), 8, eta_true=np.array([0.0099]))
    # exact inverse: the linearization residual vanishes
    assert rep.linearization_residual == 0.0
    assert rep.recon_bound == 0.0


@pytest.mark.parametrize("nu, mu", [(1.0, 1.0), (2.0, 1.0), (1.0, 2.0), (0.3, 0.5)])
@pytest.mark.parametrize("q", [0.1, 0.5, 0.9, 0.99])
def test_sufficiency_geometric_families(nu, mu, q):
    fam = geometric_family(nu, mu)
    k1_inv = exact_inverse(fam)
    _, r, r0 = theorem1_radius(nu, mu, k1_inv.operator_norm)
    phi = np.array([q * r / k1_inv.operator_norm])
    coeffs = inverse_coefficients(fam, k1_inv, phi, 12)
    norms = coeffs.term_norms
    assert np.all(norms[1:] <= (q + 0.05) * norms[:-1])
    assert abs(reconstruct(coeffs)[0]) <= r0 * (1 + 1e-6)


def test_sufficiency_random_scalar_sweep():
    rng = np.random.default_rng(0)
    for _ in range(100):
        c = rng.uniform(-1, 1, 12)
        c[0] = rng.choice([1.0, 2.0, -1.5])
        fam = make_scalar_family(c, mu=rng.uniform(0.5, 2.0))
        k1_inv = exact_inverse(fam)
        _, r, r0 = theorem1_radius(fam.nu, fam.mu, k1_inv.operator_norm)
        q = rng.uniform(0.05, 0.99)
        coeffs = inverse_coefficients(fam, k1_inv, np.array([q * r / k1_inv.operator_norm]), 12)
        tn = coeffs.term_norms
        # geometric envelope: ||terms[m]|| <= ||terms[1]|| (q + 0.05)^(m-1)
        assert np.all(tn[1:] <= tn[0] * (q + 0.05) ** np.arange(1, 12))
        assert abs(reconstruct(coeffs)[0]) <= r0 * (1 + 1e-6)


@pytest.mark.parametrize("nu, mu", [(1.0, 1.0), (2.0, 1.0), (1.0, 2.0)])
def test_tail_bound_dominates_observed_tail(nu, mu):
    fam = geometric_family(nu, mu)
    k1_inv = exact_inverse(fam)
    _, r, r0 = theorem1_radius(nu, mu, k1_inv.operator_norm)
    eta1 = 0.7 * r
    coeffs = inverse_coefficients(fam, k1_inv, np.array([eta1 / k1_inv.operator_norm]), 12)
    sums = coeffs.partial_sums()[:, 0]
    for N in range(1, 11):
        assert abs(sums[11] - sums[N - 1]) <= tail_bound(eta1, r, r0, N)


# --- plateau detection ------------------------------------------------------


def test_error_plateau():
    assert error_plateau([1.0, 0.5, 0.2, 0.2, 0.2]) == (3, True)
    assert error_plateau([1.0, 0.5, 0.1]) == (3, True)
    assert error_plateau([1.0, 2.0, 2.0]) == (2, False)
