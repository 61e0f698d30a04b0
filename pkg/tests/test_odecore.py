"""ODE core: quasi-derivative marching, Wronskians, tau application."""

import math

import numpy as np
import pytest

from slq.functions import polynomial
from slq.odecore import integrate_tau, tau_apply, wronskian


def test_integrate_tau_matches_sine(dirichlet):
    sol = integrate_tau(dirichlet, 1.0, 0.0, (0.0, 1.0), math.pi)
    for x in (0.5, 1.0, 2.0, 3.0):
        u, u1 = sol.pair(x)
        assert u == pytest.approx(math.sin(x), abs=1e-10)
        assert u1 == pytest.approx(math.cos(x), abs=1e-10)


def test_integrate_tau_complex_energy(dirichlet):
    z = 1j
    sol = integrate_tau(dirichlet, z, 0.0, (1.0, 0.0), 1.0)
    k = np.sqrt(complex(z))
    u, _ = sol.pair(1.0)
    assert u == pytest.approx(np.cos(k * 1.0), abs=1e-9)


def test_wronskian_constant_along_solutions(dirichlet):
    s1 = integrate_tau(dirichlet, 4.0, 0.0, (1.0, 0.0), math.pi, tol=1e-12)
    s2 = integrate_tau(dirichlet, 4.0, 0.0, (0.0, 1.0), math.pi, tol=1e-12)
    values = [wronskian(s1, s2, x) for x in np.linspace(0.2, 3.0, 9)]
    assert max(abs(v - values[0]) for v in values) < 1e-10


def test_wronskian_bilinear(dirichlet):
    s1 = integrate_tau(dirichlet, 2.0, 0.0, (1.0, 0.5), 3.0)
    s2 = integrate_tau(dirichlet, 2.0, 0.0, (0.0, 1.0), 3.0)
    x = 1.2
    w12 = wronskian(s1, s2, x)
    w21 = wronskian(s2, s1, x)
    assert w12 == pytest.approx(-w21, abs=1e-12)


def test_tau_apply_exact_on_polynomials(dirichlet):
    # tau f = -f'' for p = 1, q = 0, r = 1; exact derivatives available.
    f = polynomial(dirichlet, [0.0, 0.0, 1.0])   # x^2
    vals = tau_apply(dirichlet, f, [0.5, 1.5])
    assert np.allclose(vals, [-2.0, -2.0], atol=1e-12)


def test_tau_apply_legendre_eigenfunction(legendre):
    # Legendre P2 = (3x^2 - 1)/2 satisfies tau P2 = 6 P2.
    p2 = polynomial(legendre, [-0.5, 0.0, 1.5])
    xs = [-0.7, -0.2, 0.1, 0.6]
    vals = tau_apply(legendre, p2, xs)
    want = [6 * p2(x) for x in xs]
    assert np.allclose(vals, want, atol=1e-10)


def test_tau_apply_finite_difference_path(legendre):
    # An object without analytic second derivatives exercises the stencil.
    class Plain:
        def __init__(self, spec):
            self.spec = spec

        def __call__(self, x):
            return math.sin(x)

        def qd(self, x):
            return self.spec.p(x) * math.cos(x)

    vals = tau_apply(legendre, Plain(legendre), [0.25])
    # tau sin = -((1-x^2) cos)' = 2x cos + (1-x^2) sin at x.
    x = 0.25
    want = 2 * x * math.cos(x) + (1 - x * x) * math.sin(x)
    assert vals[0] == pytest.approx(want, rel=1e-7)
