"""Acceptance gate: end-to-end checks at pinned tolerances.

Each test freezes one top-level correctness claim of the toolkit: Green-type
identities in all three endpoint regimes, spectral regression against
classical oracles, cut-point independence of the regularized form, Wronskian
normalization, the boundary-triplet algebra, and the cross-path equality
between the decorated forms and the relation route.
"""

import math

import numpy as np
import pytest

from slq.bvalues import gbv, patched_pair
from slq.classify import LIMIT_CIRCLE, LIMIT_POINT, classify_endpoint
from slq.extensions import Coupled, LpLp, OneLC, Separated, eigenvalues_shoot
from slq.forms import (
    REGIME_LC_LC,
    REGIME_LC_LP,
    REGIME_LP_LP,
    FormWindow,
    green_identity_residual,
    q_base,
    q_decorated,
)
from slq.functions import BumpFn, ExpDecay, GaussianPoly, polynomial
from slq.odecore import wronskian
from slq.problem import catalog, validate
from slq.triplets import (
    _weighted_pairing,
    decompose,
    form_from_relation,
    pair_from_extension,
    triplet_green_residual,
)


def _two_lc_pool(spec, bases):
    """Assembled dom(T_max) members: polynomials, bumps, patched pair."""
    a, b = spec.interval.endpoints()
    mid = spec.interval.interior_point()
    pp = patched_pair(spec, bases[0], bases[1])
    return [
        pp.v1,
        pp.v2,
        polynomial(spec, [1.0, 0.5]),
        polynomial(spec, [0.2, -1.0, 0.4]),
        BumpFn(spec, center=mid, width=0.35 * (b - a)),
    ]


# -------------------------------------------------------------------------
# 1. Green identity, two limit-circle endpoints
# -------------------------------------------------------------------------


@pytest.mark.parametrize("problem", ["dirichlet", "legendre"])
def test_green_identity_two_lc(problem, request):
    spec = request.getfixturevalue(problem)
    bases = request.getfixturevalue(f"{problem}_bases")
    pool = _two_lc_pool(spec, bases)
    n_pairs = 0
    for f in pool:
        for g in pool:
            pairing = _weighted_pairing(spec, bases, f, g, None)
            res = green_identity_residual(spec, bases, None, f, g)
            assert abs(res) <= 1e-6 * (1 + abs(pairing)), (f, g, res)
            n_pairs += 1
    assert n_pairs >= 20


# -------------------------------------------------------------------------
# 2. Green identity, one limit-circle endpoint (free half-line)
# -------------------------------------------------------------------------


def test_green_identity_one_lc(free_halfline, free_halfline_bases):
    spec, bases = free_halfline, free_halfline_bases
    pool = [
        ExpDecay(spec, [1.0], k=1.0),
        ExpDecay(spec, [0.0, 1.0], k=1.5),
        ExpDecay(spec, [2.0, -1.0], k=1.0),
        ExpDecay(spec, [1.0, 0.0, 1.0], k=2.0),
    ]
    n_pairs = 0
    for f in pool:
        for g in pool:
            pairing = _weighted_pairing(spec, bases, f, g, None)
            res = green_identity_residual(spec, bases, None, f, g,
                                          regime=REGIME_LC_LP)
            assert abs(res) <= 1e-6 * (1 + abs(pairing)), (f, g, res)
            n_pairs += 1
    assert n_pairs >= 10


def test_limit_point_wronskian_vanishes(free_halfline):
    # The Wronskian of two maximal-domain members tends to zero at the
    # limit-point endpoint.
    spec = free_halfline
    f = ExpDecay(spec, [1.0, 2.0], k=1.0)
    g = ExpDecay(spec, [0.5, -1.0], k=1.5)
    tail = [abs(wronskian(f, g, x)) for x in (5.0, 10.0, 15.0, 20.0)]
    assert all(b <= a for a, b in zip(tail, tail[1:]))
    assert tail[-1] < 1e-6


# -------------------------------------------------------------------------
# 3. Identity and spectrum in the limit-point/limit-point regime
# -------------------------------------------------------------------------


def test_lp_lp_identity_hermite(oscillator, oscillator_bases):
    spec, bases = oscillator, oscillator_bases
    pool = [GaussianPoly.hermite(spec, n) for n in range(4)]
    for f in pool:
        for g in pool:
            pairing = _weighted_pairing(spec, bases, f, g, None)
            res = green_identity_residual(spec, bases, None, f, g,
                                          regime=REGIME_LP_LP)
            assert abs(res) <= 1e-6 * (1 + abs(pairing)), (f, g, res)


def test_lp_lp_oscillator_spectrum(oscillator):
    eigs = eigenvalues_shoot(oscillator, LpLp(), (0.5, 7.5))
    lams = [e.lam for e in eigs]
    assert lams == pytest.approx([1.0, 3.0, 5.0, 7.0], abs=1e-5)


# -------------------------------------------------------------------------
# 4. Spectral regression against classical oracles
# -------------------------------------------------------------------------


def test_spectrum_dirichlet(dirichlet, dirichlet_bases):
    eigs = eigenvalues_shoot(dirichlet, Separated(0.0, 0.0), (0.5, 17.0),
                             bases=dirichlet_bases)
    lams = [e.lam for e in eigs]
    assert lams == pytest.approx([1.0, 4.0, 9.0, 16.0], abs=1e-6)


def test_spectrum_neumann(dirichlet, dirichlet_bases):
    eigs = eigenvalues_shoot(dirichlet,
                             Separated(math.pi / 2, math.pi / 2),
                             (0.5, 10.0), bases=dirichlet_bases)
    lams = [e.lam for e in eigs]
    assert lams == pytest.approx([1.0, 4.0, 9.0], abs=1e-6)


def test_spectrum_legendre(legendre, legendre_bases):
    eigs = eigenvalues_shoot(legendre, Separated(0.0, 0.0), (-0.5, 12.5),
                             bases=legendre_bases)
    lams = [e.lam for e in eigs]
    assert lams == pytest.approx([0.0, 2.0, 6.0, 12.0], abs=1e-6)


# -------------------------------------------------------------------------
# 5. Cut-point independence of the regularized form
# -------------------------------------------------------------------------


def _windows(spec, bases, n=5):
    a, b = spec.interval.endpoints()
    a0 = bases[0].nonvanish_bound
    b0 = bases[1].nonvanish_bound
    out = []
    for t in np.linspace(0.15, 0.85, n):
        c = a + t * (a0 - a) if math.isfinite(a) else a0 - 1.0 - 4.0 * t
        d = b - t * (b - b0) if math.isfinite(b) else b0 + 1.0 + 4.0 * t
        out.append(FormWindow(c, d))
    return out


def _cut_pool(spec, bases, regime):
    if regime == REGIME_LC_LP:
        return [
            ExpDecay(spec, [1.0], k=1.0),
            ExpDecay(spec, [0.0, 1.0], k=1.5),
            ExpDecay(spec, [2.0, -1.0], k=1.0),
            ExpDecay(spec, [1.0, 0.0, 1.0], k=2.0),
            BumpFn(spec, center=2.0, width=1.0),
        ]
    return _two_lc_pool(spec, bases)


@pytest.mark.parametrize("problem,regime", [
    ("dirichlet", REGIME_LC_LC),
    ("legendre", REGIME_LC_LC),
    ("bessel_half", REGIME_LC_LC),
    ("free_halfline", REGIME_LC_LP),
])
def test_cut_point_independence(problem, regime, request):
    spec = request.getfixturevalue(problem)
    bases = request.getfixturevalue(f"{problem}_bases")
    pool = _cut_pool(spec, bases, regime)
    windows = _windows(spec, bases)
    n_pairs = 0
    for f in pool:
        for g in pool:
            vals = [q_base(spec, bases, w, regime, f, g).value
                    for w in windows]
            spread = max(abs(v - vals[0]) for v in vals)
            assert spread <= 1e-8 * (1 + abs(vals[0])), (f, g, spread)
            n_pairs += 1
    assert n_pairs >= 20


# -------------------------------------------------------------------------
# 6. Wronskian constancy and normalization
# -------------------------------------------------------------------------


@pytest.mark.parametrize("problem", [
    "dirichlet", "legendre", "free_halfline", "bessel_half", "oscillator",
])
def test_wronskian_normalization(problem, request):
    bases = request.getfixturevalue(f"{problem}_bases")
    for basis in bases:
        lo, hi = basis.trust_interval
        for x in np.linspace(lo, hi, 50):
            w = wronskian(basis.u_hat, basis.u, x)
            assert abs(w - 1.0) <= 1e-8, (problem, basis.endpoint, x, w)


# -------------------------------------------------------------------------
# 7. Triplet algebra on random parameter draws
# -------------------------------------------------------------------------


def test_triplet_algebra_random_draws():
    rng = np.random.default_rng(42)
    for trial in range(200):
        kind = trial % 2
        if kind == 0:
            alpha, beta = rng.uniform(0.0, math.pi, 2)
            ext = Separated(alpha, beta)
        else:
            phi = rng.uniform(0.0, math.pi)
            if trial % 4 == 1:
                # R12 = 0 subcase with the closed-form c_theta oracle.
                r11 = rng.uniform(0.3, 2.0) * rng.choice([-1.0, 1.0])
                r21 = rng.uniform(-2.0, 2.0)
                R = ((r11, 0.0), (r21, 1.0 / r11))
            else:
                r11 = rng.uniform(0.3, 2.0)
                r12 = rng.uniform(0.2, 2.0)
                r21 = rng.uniform(-2.0, 2.0)
                R = ((r11, r12), (r21, (1.0 + r12 * r21) / r11))
            ext = Coupled(phi, R)
        pair = pair_from_extension(ext)     # runs validate_pair
        A = pair.A
        Ap = np.linalg.pinv(A)
        for defect in (
            np.linalg.norm(A @ Ap @ A - A),
            np.linalg.norm(Ap @ A @ Ap - Ap),
            np.linalg.norm((A @ Ap).conj().T - A @ Ap),
            np.linalg.norm((Ap @ A).conj().T - Ap @ A),
        ):
            assert defect <= 1e-12
        rel = decompose(pair)
        if kind == 0 and math.sin(ext.alpha) > 1e-3 \
                and math.sin(ext.beta) > 1e-3:
            theta = rel.dom_basis @ rel.theta_op @ rel.dom_basis.conj().T
            want = np.diag([-1 / math.tan(ext.alpha),
                            1 / math.tan(ext.beta)])
            assert np.max(np.abs(theta - want)) \
                <= 1e-12 * (1 + np.max(np.abs(want)))
        if kind == 1 and ext.R[0][1] == 0.0:
            R11, R21 = ext.R[0][0], ext.R[1][0]
            R22 = ext.R[1][1]
            want = -R21 / (R11 + R22) if abs(R11 + R22) > 1e-12 else None
            if want is not None and rel.c_theta is not None:
                assert rel.c_theta == pytest.approx(want, abs=1e-10)


# -------------------------------------------------------------------------
# 8. Cross-path equality: decorated form vs boundary relation
# -------------------------------------------------------------------------


def _random_separated(rng):
    return Separated(*rng.uniform(0.05, math.pi - 0.05, 2))


def _random_coupled(rng):
    r11 = rng.uniform(0.3, 1.8)
    r12 = rng.uniform(0.2, 1.8)
    r21 = rng.uniform(-1.5, 1.5)
    return Coupled(rng.uniform(0.05, math.pi - 0.05),
                   ((r11, r12), (r21, (1.0 + r12 * r21) / r11)))


@pytest.mark.parametrize("regime", ["separated", "coupled"])
def test_cross_path_two_lc(regime, dirichlet, dirichlet_bases):
    spec, bases = dirichlet, dirichlet_bases
    rng = np.random.default_rng(3 if regime == "separated" else 4)
    pool = [polynomial(spec, rng.uniform(-1, 1, 3)) for _ in range(6)]
    cache = {}
    for trial in range(50):
        ext = _random_separated(rng) if regime == "separated" \
            else _random_coupled(rng)
        f = pool[rng.integers(len(pool))]
        g = pool[rng.integers(len(pool))]
        q1 = q_decorated(spec, bases, None, ext, f, g,
                         gbv_cache=cache).value
        q2 = form_from_relation(spec, bases, None, ext, f, g,
                                gbv_cache=cache)
        assert abs(q1 - q2) <= 1e-6 * (1 + abs(q1)), (trial, q1, q2)


def test_cross_path_one_lc(free_halfline, free_halfline_bases):
    spec, bases = free_halfline, free_halfline_bases
    rng = np.random.default_rng(5)
    pool = [ExpDecay(spec, rng.uniform(-1, 1, 2), k=k)
            for k in (1.0, 1.5, 2.0, 2.5)]
    cache = {}
    for trial in range(50):
        ext = OneLC(alpha=rng.uniform(0.05, math.pi - 0.05),
                    lc_endpoint="a")
        f = pool[rng.integers(len(pool))]
        g = pool[rng.integers(len(pool))]
        q1 = q_decorated(spec, bases, None, ext, f, g,
                         gbv_cache=cache).value
        q2 = form_from_relation(spec, bases, None, ext, f, g,
                                gbv_cache=cache)
        assert abs(q1 - q2) <= 1e-6 * (1 + abs(q1)), (trial, q1, q2)


def test_cross_path_lp_lp(oscillator, oscillator_bases):
    spec, bases = oscillator, oscillator_bases
    rng = np.random.default_rng(6)
    pool = [GaussianPoly.hermite(spec, n) for n in range(3)]
    for trial in range(50):
        f = pool[rng.integers(len(pool))]
        g = pool[rng.integers(len(pool))]
        q1 = q_decorated(spec, bases, None, LpLp(), f, g).value
        q2 = form_from_relation(spec, bases, None, LpLp(), f, g)
        assert abs(q1 - q2) <= 1e-6 * (1 + abs(q1)), (trial, q1, q2)


# -------------------------------------------------------------------------
# 9. Abstract Green identity for the boundary triplet
# -------------------------------------------------------------------------


@pytest.mark.parametrize("problem", ["dirichlet", "legendre", "bessel_half"])
def test_triplet_green_identity(problem, request):
    spec = request.getfixturevalue(problem)
    bases = request.getfixturevalue(f"{problem}_bases")
    pool = _two_lc_pool(spec, bases)
    cache = {}
    n_pairs = 0
    for f in pool:
        for g in pool:
            res = triplet_green_residual(spec, bases, f, g, gbv_cache=cache)
            assert abs(res) <= 1e-6, (f, g, res)
            n_pairs += 1
    assert n_pairs >= 20


# -------------------------------------------------------------------------
# 10. Generalized boundary values at a regular endpoint
# -------------------------------------------------------------------------


def test_gbv_regular_polynomials(dirichlet, dirichlet_bases):
    rng = np.random.default_rng(11)
    for _ in range(10):
        coeffs = rng.uniform(-2, 2, 4)
        g = polynomial(dirichlet, coeffs)
        v = gbv(dirichlet, dirichlet_bases[0], g)
        assert abs(v.tilde - g(0.0)) <= 1e-8
        assert abs(v.tilde_prime - coeffs[1]) <= 1e-8


# -------------------------------------------------------------------------
# 11. Endpoint classification
# -------------------------------------------------------------------------


def test_classification_catalog(legendre, free_halfline, bessel_half):
    bessel_two = catalog("bessel(2)")
    validate(bessel_two)
    for probe in (1j, 2j):
        assert classify_endpoint(legendre, "a", probe_z=probe).kind \
            == LIMIT_CIRCLE
        assert classify_endpoint(legendre, "b", probe_z=probe).kind \
            == LIMIT_CIRCLE
        assert classify_endpoint(bessel_two, "a", probe_z=probe).kind \
            == LIMIT_POINT
        assert classify_endpoint(free_halfline, "b", probe_z=probe).kind \
            == LIMIT_POINT
        assert classify_endpoint(bessel_half, "a", probe_z=probe).kind \
            == LIMIT_CIRCLE
    # Anchor independence at the singular limit-point endpoint.
    for anchor in (0.3, 0.6):
        assert classify_endpoint(bessel_two, "a", anchor=anchor).kind \
            == LIMIT_POINT
