"""Regularized sesquilinear forms and Green-type identities.

The base form splits the energy pairing into two endpoint pieces written
through the N-operator of a reference solution w (nonprincipal at a
limit-circle end, principal at a limit-point end), a middle Dirichlet
integral between the cut points, and boundary corrections at the cuts:

    Q_{c,d}(f,g) = int_a^c conj(Nf) Ng + int_d^b conj(Nf) Ng
                 + lambda0 (int_a^c + int_d^b) r conj(f) g
                 + int_c^d (p^{-1} conj(f^[1]) g^[1] + q conj(f) g)
                 + (w^[1]/w)(c) conj(f(c)) g(c)
                 - (w^[1]/w)(d) conj(f(d)) g(d).

Boundary decorations then produce the form of every self-adjoint extension.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from .bvalues import gbv
from .errors import (
    BasisVanishes,
    DomainConstraintViolated,
    EvaluationOutsideSupport,
    FormIntegralDiverges,
    NoConvergence,
    WindowInvalid,
)
from .odecore import _quasi_pair, tau_apply
from .quadrature import improper_integral, panel
from .solutions import ReductionSolution

REGIME_LC_LC = "lc_lc"
REGIME_LC_LP = "lc_lp"
REGIME_LP_LP = "lp_lp"


@dataclass(frozen=True)
class FormWindow:
    c: float
    d: float

    def validate(self, spec, basis_a, basis_b):
        a, b = spec.interval.endpoints()
        a0 = basis_a.nonvanish_bound
        b0 = basis_b.nonvanish_bound
        if not (a < self.c < a0 <= b0 < self.d < b):
            raise WindowInvalid(
                f"need a < c < {a0} <= {b0} < d < b, got c={self.c}, d={self.d}"
            )


def default_window(spec, basis_a, basis_b):
    """Midpoints of the two side windows (a, a0) and (b0, b)."""
    a, b = spec.interval.endpoints()
    a0 = basis_a.nonvanish_bound
    b0 = basis_b.nonvanish_bound
    c = 0.5 * (a + a0) if math.isfinite(a) else a0 - max(1.0, abs(a0))
    d = 0.5 * (b0 + b) if math.isfinite(b) else b0 + max(1.0, abs(b0))
    return FormWindow(c, d)


@dataclass
class FormValue:
    value: complex
    pieces: dict = field(default_factory=dict)
    error: float = 0.0
    window: FormWindow = None

    def total_from_pieces(self):
        return sum(self.pieces.values())


class NOperator:
    """N_w f = (f^[1] w - f w^[1]) / (p^{1/2} w) on a side window."""

    def __init__(self, spec, w):
        self.spec = spec
        self.w = w

    def __call__(self, x, f):
        fu, fu1 = _quasi_pair(f, x)
        wu, wu1 = _quasi_pair(self.w, x)
        if wu == 0.0:
            raise BasisVanishes(f"reference solution vanishes at x={x}")
        return (fu1 * wu - fu * wu1) / (math.sqrt(self.spec.p(x)) * wu)


def n_operator_apply(spec, basis_fn, f, xs):
    """Sample N_w f on a grid (w = the basis function of the side window)."""
    op = NOperator(spec, basis_fn)
    return np.array([op(x, f) for x in np.atleast_1d(xs)])


def _coverage(w):
    """Evaluable x-range of a solution-like object; analytic functions are
    unrestricted."""
    if hasattr(w, "x_min") and hasattr(w, "x_max"):
        return float(w.x_min), float(w.x_max)
    if hasattr(w, "fn"):
        return _coverage(w.fn)
    return -math.inf, math.inf


def _side_cutoff(basis, w):
    """Farthest trustworthy point toward the endpoint for side integrals."""
    end = basis.endpoint_value
    toward_b = basis.endpoint == "b"
    if isinstance(w, ReductionSolution):
        # Keep inside the region where the reduction tail is above its
        # noise floor (w vanishes identically beyond it and the N-operator
        # quotient would blow up).
        x_in = basis.anchor
        x_out = w.x_max if toward_b else w.x_min
        if abs(w.T(x_out)) > 10.0 * w.t_floor:
            return x_out
        for _ in range(80):
            mid = 0.5 * (x_in + x_out)
            if abs(w.T(mid)) > 10.0 * w.t_floor:
                x_in = mid
            else:
                x_out = mid
        return x_in
    x_min, x_max = _coverage(w)
    if toward_b:
        return x_max if x_max < end else None
    return x_min if x_min > end else None


def _complex_improper(fn, start, endpoint, cutoff=None):
    """Signed improper integral of a possibly complex integrand."""
    probe = fn(0.5 * (start + (endpoint if math.isfinite(endpoint)
                               else start + 1.0)))
    if isinstance(probe, complex) or getattr(probe, "imag", 0.0) != 0.0:
        re = improper_integral(lambda x: float(np.real(fn(x))), start,
                               endpoint, cutoff=cutoff)
        im = improper_integral(lambda x: float(np.imag(fn(x))), start,
                               endpoint, cutoff=cutoff)
        ok = re.converged and im.converged
        div = re.diverged or im.diverged
        return complex(re.value, im.value), re.error + im.error, ok, div
    res = improper_integral(lambda x: float(np.real(fn(x))), start,
                            endpoint, cutoff=cutoff)
    return res.value, res.error, res.converged, res.diverged


def _complex_panel(fn, lo, hi):
    probe = fn(0.5 * (lo + hi))
    if isinstance(probe, complex) or getattr(probe, "imag", 0.0) != 0.0:
        vr, er = panel(lambda x: float(np.real(fn(x))), lo, hi)
        vi, ei = panel(lambda x: float(np.imag(fn(x))), lo, hi)
        return complex(vr, vi), er + ei
    return panel(lambda x: float(np.real(fn(x))), lo, hi)


def _side_n_integral(spec, basis, op, is_lc, f, g, cut, cutoff):
    """One side's N-integral as the true integral from the endpoint to cut.

    At a limit-circle side the slowly decaying part of the integrand,
    conj(f~') g~' / (p u_hat^2), is split off and summed in closed form:
    (u/u_hat)' = -1/(p u_hat^2) by the Wronskian normalization, so its
    integral telescopes to a boundary evaluation at the cut.  The remainder
    decays fast enough for the window extrapolation to reach ~1e-12.
    """
    end = basis.endpoint_value
    sign = 1.0 if basis.endpoint == "b" else -1.0
    lead = 0.0
    lead_err = 0.0
    subtract = None
    if is_lc:
        coeff = None
        if not basis.regular and cutoff is not None:
            # The split integral(endpoint, cut) of c/(p u_hat^2) = c*J is an
            # exact identity for ANY constant c, so pick the constant that
            # best flattens the tail: the N-operator product evaluated at
            # the farthest trustworthy point.  This avoids inheriting the
            # extrapolation error of the generalized boundary values, which
            # would leave a spurious log-divergent residue.
            def m_at(x):
                h = _quasi_pair(basis.u_hat, x)[0]
                return np.conj(op(x, f)) * op(x, g) * spec.p(x) * h * h

            coeff = m_at(cutoff)
        else:
            try:
                vf = gbv(spec, basis, f)
                vg = gbv(spec, basis, g)
            except NoConvergence:
                vf = vg = None
            if vf is not None:
                coeff = np.conj(vf.tilde_prime) * vg.tilde_prime
        if coeff is not None:
            uu = _quasi_pair(basis.u, cut)[0]
            hu = _quasi_pair(basis.u_hat, cut)[0]
            # J = integral of 1/(p u_hat^2) from the endpoint to the cut.
            # The split is an identity for any constant, so the only error
            # in the lead term is the basis accuracy at the cut itself.
            J = -sign * uu / hu
            lead = coeff * J
            lead_err = 1e-12 * (1.0 + abs(lead))

            def subtract(x):
                h = _quasi_pair(basis.u_hat, x)[0]
                return coeff / (spec.p(x) * h * h)

    def integrand(x):
        v = np.conj(op(x, f)) * op(x, g)
        if subtract is not None:
            v = v - subtract(x)
        return v

    val, e, ok, div = _complex_improper(integrand, cut, end, cutoff=cutoff)
    if div or not ok:
        raise FormIntegralDiverges(
            f"N-integral toward endpoint {basis.endpoint} does not converge"
        )
    # improper_integral ran cut -> endpoint; the form wants endpoint -> cut.
    return lead + sign * val, e + lead_err


def q_base(spec, bases, window, regime, f, g):
    """Base form Q_{c,d}(f, g) for the given endpoint regime.

    bases is the pair (basis_a, basis_b); regime selects the reference
    solution on each side: u_hat at a limit-circle end, u at a limit-point
    end.
    """
    basis_a, basis_b = bases
    if window is None:
        window = default_window(spec, basis_a, basis_b)
    window.validate(spec, basis_a, basis_b)
    if regime == REGIME_LC_LC:
        lc = {"a": True, "b": True}
    elif regime == REGIME_LP_LP:
        lc = {"a": False, "b": False}
    elif regime == REGIME_LC_LP:
        # The LC side is the one whose endpoint classification the caller
        # encoded in the bases' diagnostics; default: a is the LC side.
        lc = {"a": bases[0].diagnostics.get("lc_side", True),
              "b": bases[1].diagnostics.get("lc_side", False)}
    else:
        raise ValueError(f"unknown regime {regime!r}")
    w_a = basis_a.u_hat if lc["a"] else basis_a.u
    w_b = basis_b.u_hat if lc["b"] else basis_b.u
    a, b = spec.interval.endpoints()
    c, d = window.c, window.d
    lam0 = spec.lambda0
    op_a = NOperator(spec, w_a)
    op_b = NOperator(spec, w_b)

    cut_a = _side_cutoff(basis_a, w_a)
    cut_b = _side_cutoff(basis_b, w_b)

    pieces = {}
    err = 0.0

    def conj(v):
        return np.conj(v)

    # Side N-integrals (improper toward the endpoints; improper_integral is
    # orientation-signed from the cut toward the endpoint).
    val, e = _side_n_integral(spec, basis_a, op_a, lc["a"], f, g, c, cut_a)
    pieces["left_N_integral"] = val
    err += e
    val, e = _side_n_integral(spec, basis_b, op_b, lc["b"], f, g, d, cut_b)
    pieces["right_N_integral"] = val
    err += e

    if lam0 != 0.0:
        val, e, ok, div = _complex_improper(
            lambda x: lam0 * spec.r(x) * conj(_quasi_pair(f, x)[0])
            * _quasi_pair(g, x)[0], c, a, cutoff=cut_a)
        if div or not ok:
            raise FormIntegralDiverges("left mass integral does not converge")
        pieces["left_lambda0_mass"] = -val
        err += e
        val, e, ok, div = _complex_improper(
            lambda x: lam0 * spec.r(x) * conj(_quasi_pair(f, x)[0])
            * _quasi_pair(g, x)[0], d, b, cutoff=cut_b)
        if div or not ok:
            raise FormIntegralDiverges("right mass integral does not converge")
        pieces["right_lambda0_mass"] = val
        err += e
    else:
        pieces["left_lambda0_mass"] = 0.0
        pieces["right_lambda0_mass"] = 0.0

    def middle(x):
        fu, fu1 = _quasi_pair(f, x)
        gu, gu1 = _quasi_pair(g, x)
        return conj(fu1) * gu1 / spec.p(x) + spec.q(x) * conj(fu) * gu

    val, e = _complex_panel(middle, c, d)
    pieces["middle_dirichlet_integral"] = val
    err += e

    # Boundary corrections at the cut points.
    wu_c, wu1_c = _quasi_pair(w_a, c)
    if wu_c == 0.0:
        raise BasisVanishes(f"reference solution vanishes at cut c={c}")
    fu_c = _quasi_pair(f, c)[0]
    gu_c = _quasi_pair(g, c)[0]
    pieces["boundary_correction_c"] = (wu1_c / wu_c) * conj(fu_c) * gu_c

    wu_d, wu1_d = _quasi_pair(w_b, d)
    if wu_d == 0.0:
        raise BasisVanishes(f"reference solution vanishes at cut d={d}")
    fu_d = _quasi_pair(f, d)[0]
    gu_d = _quasi_pair(g, d)[0]
    pieces["boundary_correction_d"] = -(wu1_d / wu_d) * conj(fu_d) * gu_d

    pieces["decoration_terms"] = 0.0
    value = sum(pieces.values())
    if abs(np.imag(value)) == 0.0:
        value = float(np.real(value))
    return FormValue(value=value, pieces=pieces, error=err, window=window)


def _regime_of(ext, bases):
    if ext.variant in ("separated", "coupled"):
        return REGIME_LC_LC
    if ext.variant == "one_lc":
        return REGIME_LC_LP
    return REGIME_LP_LP


def q_decorated(spec, bases, window, ext, f, g, tol=1e-6,
                gbv_cache=None):
    """Decorated form of the extension `ext` applied to (f, g).

    Adds the boundary decoration of the extension to the base form and
    enforces the extension's domain constraints on the generalized boundary
    values of f and g.
    """
    regime = _regime_of(ext, bases)
    basis_a, basis_b = bases
    if regime == REGIME_LC_LP and ext.lc_endpoint == "b":
        basis_a.diagnostics["lc_side"] = False
        basis_b.diagnostics["lc_side"] = True
    base = q_base(spec, bases, window, regime, f, g)

    def bvals(fn):
        if gbv_cache is not None and id(fn) in gbv_cache:
            return gbv_cache[id(fn)]
        out = {}
        if regime in (REGIME_LC_LC,):
            out["a"] = gbv(spec, basis_a, fn)
            out["b"] = gbv(spec, basis_b, fn)
        elif regime == REGIME_LC_LP:
            side = ext.lc_endpoint
            out[side] = gbv(spec, basis_a if side == "a" else basis_b, fn)
        if gbv_cache is not None:
            gbv_cache[id(fn)] = out
        return out

    deco = 0.0
    if ext.variant == "separated":
        vf, vg = bvals(f), bvals(g)
        fa, fb = vf["a"].tilde, vf["b"].tilde
        ga, gb = vg["a"].tilde, vg["b"].tilde
        scale = 1.0 + max(abs(v) for v in (fa, fb, ga, gb))
        if ext.alpha == 0.0:
            if abs(ga) > tol * scale or abs(fa) > tol * scale:
                raise DomainConstraintViolated(
                    f"alpha=0 requires g~(a)=0, got {fa}, {ga}"
                )
        else:
            deco += -_cot(ext.alpha) * np.conj(fa) * ga
        if ext.beta == 0.0:
            if abs(gb) > tol * scale or abs(fb) > tol * scale:
                raise DomainConstraintViolated(
                    f"beta=0 requires g~(b)=0, got {fb}, {gb}"
                )
        else:
            deco += _cot(ext.beta) * np.conj(fb) * gb
    elif ext.variant == "coupled":
        vf, vg = bvals(f), bvals(g)
        fa, fb = vf["a"].tilde, vf["b"].tilde
        ga, gb = vg["a"].tilde, vg["b"].tilde
        R = ext.matrix()
        eip = cmath.exp(1j * ext.phi)
        if abs(R[0, 1]) > 0.0:
            deco = -(1.0 / R[0, 1]) * (
                R[0, 0] * np.conj(fa) * ga
                - np.conj(eip) * np.conj(fa) * gb
                - eip * np.conj(fb) * ga
                + R[1, 1] * np.conj(fb) * gb
            )
        else:
            scale = 1.0 + max(abs(v) for v in (fa, fb, ga, gb))
            for va, vb in ((fa, fb), (ga, gb)):
                if abs(vb - eip * R[0, 0] * va) > tol * scale:
                    raise DomainConstraintViolated(
                        f"coupled R12=0 requires g~(b) = e^(i phi) R11 g~(a)"
                        f", got {va} -> {vb}"
                    )
            deco = -R[0, 0] * R[1, 0] * np.conj(fa) * ga
    elif ext.variant == "one_lc":
        side = ext.lc_endpoint
        vf, vg = bvals(f), bvals(g)
        fl, gl = vf[side].tilde, vg[side].tilde
        scale = 1.0 + max(abs(fl), abs(gl))
        if ext.alpha == 0.0:
            if abs(gl) > tol * scale or abs(fl) > tol * scale:
                raise DomainConstraintViolated(
                    f"alpha=0 requires g~({side})=0, got {fl}, {gl}"
                )
        else:
            sgn = -1.0 if side == "a" else 1.0
            deco += sgn * _cot(ext.alpha) * np.conj(fl) * gl
    # lp_lp: no decoration.

    base.pieces["decoration_terms"] = deco
    value = base.value + deco
    if abs(np.imag(value)) == 0.0:
        value = float(np.real(value))
    base.value = value
    return base


def _cot(angle):
    return math.cos(angle) / math.sin(angle)


def _tau_of(spec, g, xs):
    """tau g on sample points, preferring exact structure when available."""
    if hasattr(g, "tau"):
        return np.array([g.tau(x) for x in np.atleast_1d(xs)])
    return np.atleast_1d(tau_apply(spec, g, xs))


def _pairing(spec, f, g_tau_fn, window, cut_a, cut_b):
    """(f, tau g) = int r conj(f) tau(g) over the whole interval."""
    a, b = spec.interval.endpoints()
    c, d = window.c, window.d

    def integrand(x):
        return spec.r(x) * np.conj(_quasi_pair(f, x)[0]) * g_tau_fn(x)

    total = 0.0 + 0.0j
    err = 0.0
    val, e, ok, div = _complex_improper(integrand, c, a, cutoff=cut_a)
    if div:
        raise FormIntegralDiverges("pairing diverges toward a")
    total += -val
    err += e
    v, e = _complex_panel(integrand, c, d)
    total += v
    err += e
    val, e, ok, div = _complex_improper(integrand, d, b, cutoff=cut_b)
    if div:
        raise FormIntegralDiverges("pairing diverges toward b")
    total += val
    err += e
    if abs(total.imag) == 0.0:
        return total.real, err
    return total, err


def green_identity_residual(spec, bases, window, f, g, regime=REGIME_LC_LC,
                            g_tau=None):
    """Residual of the Green-type identity for the base form.

    Two-LC: (f, T_max g) - Q_{c,d}(f,g) - conj(f~(a)) g~'(a)
            + conj(f~(b)) g~'(b); one-LC keeps only the LC endpoint's term;
    LP-LP has no boundary terms.
    """
    basis_a, basis_b = bases
    if window is None:
        window = default_window(spec, basis_a, basis_b)
    form = q_base(spec, bases, window, regime, f, g)

    if g_tau is None:
        def g_tau_fn(x):
            return _tau_of(spec, g, [x])[0]
    else:
        g_tau_fn = g_tau

    if regime == REGIME_LC_LC:
        lc = {"a": True, "b": True}
    elif regime == REGIME_LP_LP:
        lc = {"a": False, "b": False}
    else:
        lc = {"a": bases[0].diagnostics.get("lc_side", True),
              "b": bases[1].diagnostics.get("lc_side", False)}
    w_a = basis_a.u_hat if lc["a"] else basis_a.u
    w_b = basis_b.u_hat if lc["b"] else basis_b.u
    cut_a = _side_cutoff(basis_a, w_a)
    cut_b = _side_cutoff(basis_b, w_b)
    pairing, perr = _pairing(spec, f, g_tau_fn, window, cut_a, cut_b)

    boundary = 0.0
    if lc["a"]:
        vf = gbv(spec, basis_a, f)
        vg = gbv(spec, basis_a, g)
        boundary += -np.conj(vf.tilde) * vg.tilde_prime
    if lc["b"]:
        vf = gbv(spec, basis_b, f)
        vg = gbv(spec, basis_b, g)
        boundary += np.conj(vf.tilde) * vg.tilde_prime

    return pairing - form.value + boundary
