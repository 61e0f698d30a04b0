"""ODE core: quasi-derivative system integration, Wronskians, tau.

The second-order expression tau u = (1/r)[-(p u')' + q u] = lambda u is
integrated as the first-order system

    u'  = u1 / p
    u1' = (q - lambda r) u

in the variables (u, u^[1]) with u^[1] = p u' the first quasi-derivative.
Working in u^[1] instead of u' keeps the system well behaved where p
degenerates.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .errors import (
    EvaluationOutsideSupport,
    GridTooCoarse,
    NonFiniteState,
    StepSizeUnderflow,
)

FROM_LEFT = "from_left_anchor"
FROM_RIGHT = "from_right_anchor"


@dataclass(frozen=True)
class QuasiState:
    x: float
    u: complex
    u1: complex


class SolutionFn:
    """Dense-output trajectory of the quasi-derivative system.

    Supports evaluation of u and u^[1] anywhere in the covered range; made of
    one or more contiguous integrator segments (marching toward a singular
    endpoint appends segments).
    """

    def __init__(self, lam, segments, orientation):
        self.lam = lam
        self.orientation = orientation
        # Keep segments sorted by their left edge regardless of the
        # direction they were integrated in.
        self._segments = sorted(
            segments, key=lambda s: min(s.t[0], s.t[-1])
        )
        los = [min(s.t[0], s.t[-1]) for s in self._segments]
        his = [max(s.t[0], s.t[-1]) for s in self._segments]
        self.x_min = min(los)
        self.x_max = max(his)

    @property
    def breakpoints(self):
        pts = []
        for seg in self._segments:
            ts = seg.t if seg.t[0] <= seg.t[-1] else seg.t[::-1]
            for t in ts:
                if not pts or t > pts[-1]:
                    pts.append(float(t))
        return pts

    def _segment_for(self, x):
        if not (self.x_min <= x <= self.x_max):
            raise EvaluationOutsideSupport(
                f"x={x} outside [{self.x_min}, {self.x_max}]"
            )
        for seg in self._segments:
            lo, hi = min(seg.t[0], seg.t[-1]), max(seg.t[0], seg.t[-1])
            if lo <= x <= hi:
                return seg
        # x between segment edges (floating-point gap): nearest segment.
        return min(
            self._segments,
            key=lambda s: min(abs(x - s.t[0]), abs(x - s.t[-1])),
        )

    def pair(self, x):
        """(u(x), u^[1](x))."""
        seg = self._segment_for(x)
        u, u1 = seg.sol(x)
        return u, u1

    def __call__(self, x):
        return self.pair(x)[0]

    def qd(self, x):
        return self.pair(x)[1]

    def state(self, x):
        u, u1 = self.pair(x)
        return QuasiState(float(x), u, u1)

    def dump_csv(self, path):
        """Trajectory at the dense-output breakpoints as CSV."""
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["x", "re_u", "im_u", "re_u1", "im_u1"])
            for x in self.breakpoints:
                u, u1 = self.pair(x)
                writer.writerow([
                    repr(float(x)),
                    repr(float(np.real(u))), repr(float(np.imag(u))),
                    repr(float(np.real(u1))), repr(float(np.imag(u1))),
                ])


def _rhs(spec, lam):
    p, q, r = spec.p, spec.q, spec.r

    def fun(x, y):
        return [y[1] / p(x), (q(x) - lam * r(x)) * y[0]]

    return fun


def integrate_tau(spec, lam, anchor, init, target, tol=1e-10,
                  max_step=np.inf):
    """Solve tau u = lambda u from `anchor` to `target`.

    init is the pair (u, u^[1]) at the anchor.  Direction follows
    sign(target - anchor).  Returns a SolutionFn with dense output.
    """
    if target == anchor:
        raise ValueError("target must differ from anchor")
    is_complex = any(isinstance(v, complex) for v in (lam, *init))
    y0 = np.array(init, dtype=complex if is_complex else float)
    sol = solve_ivp(
        _rhs(spec, lam), (anchor, target), y0, method="RK45",
        rtol=tol, atol=tol * 1e-3, dense_output=True, max_step=max_step,
    )
    if not sol.success:
        raise StepSizeUnderflow(
            f"integrator stalled at x={sol.t[-1]}: {sol.message}"
        )
    if not np.all(np.isfinite(np.ascontiguousarray(sol.y).view(float))):
        raise NonFiniteState("trajectory overflowed; rescale and retry")
    orientation = FROM_LEFT if target > anchor else FROM_RIGHT
    return SolutionFn(lam, [sol], orientation)


def _quasi_pair(f, x):
    """Extract (f(x), f^[1](x)) from anything that can supply them."""
    if hasattr(f, "pair"):
        return f.pair(x)
    if hasattr(f, "qd"):
        return f(x), f.qd(x)
    raise TypeError(f"{f!r} does not expose a quasi-derivative")


def wronskian(f, g, x):
    """Modified Wronskian W(f, g)(x) = f g^[1] - f^[1] g at x."""
    fu, fu1 = _quasi_pair(f, x)
    gu, gu1 = _quasi_pair(g, x)
    return fu * gu1 - fu1 * gu


def tau_apply(spec, g, x_grid, tol=1e-7):
    """Apply tau to g on a grid.

    When g exposes analytic derivatives (attributes d1 and d2), the exact
    path (p u')' = p' u' + p u'' is used with the exact coefficient
    derivative.  Otherwise (g^[1])' comes from 4th-order central differences
    with a Richardson cross-check.
    """
    p, q, r = spec.p, spec.q, spec.r
    xs = np.atleast_1d(np.asarray(x_grid, dtype=float))
    out = np.empty(len(xs), dtype=complex)
    exact = hasattr(g, "d1") and hasattr(g, "d2")
    dp = p.deriv() if exact else None
    for i, x in enumerate(xs):
        gv = g(x)
        if exact:
            d_qd = dp(x) * g.d1(x) + p(x) * g.d2(x)
        else:
            d_qd = _qd_derivative(g, x, xs, tol)
        out[i] = (-d_qd + q(x) * gv) / r(x)
    if np.all(np.abs(out.imag) == 0.0):
        out = out.real
    return out


def _qd_derivative(g, x, xs, tol):
    def qd(t):
        return _quasi_pair(g, t)[1]

    span = xs[-1] - xs[0] if len(xs) > 1 else 1.0
    h = max(1e-4 * max(abs(x), 1.0), 1e-3 * span / max(len(xs), 1))

    def stencil(h):
        return (-qd(x + 2 * h) + 8 * qd(x + h)
                - 8 * qd(x - h) + qd(x - 2 * h)) / (12 * h)

    coarse = stencil(h)
    fine = stencil(0.5 * h)
    # 4th-order stencil: Richardson combination cancels the h^4 term.
    best = (16.0 * fine - coarse) / 15.0
    if abs(fine - coarse) > tol * (1.0 + abs(best)) * 100.0:
        raise GridTooCoarse(
            f"(g^[1])' stencil mismatch at x={x}: {abs(fine - coarse)}"
        )
    return best
