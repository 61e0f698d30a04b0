"""Command-line front end.

Each subcommand loads a problem-spec JSON file, runs one slice of the
pipeline (classification, basis construction, boundary values, forms,
Green-identity checks, eigenvalues, boundary-triplet algebra) and emits a
structured JSON report.  Reports are deterministic for a fixed spec, flag
set and package version, apart from the timestamp field.

Exit codes: 0 success, 2 parse/usage failure, 3 inconclusive classification
under --strict, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time

import numpy as np

from . import __version__
from .bvalues import gbv, patched_pair
from .classify import LIMIT_CIRCLE, classify_endpoint
from .errors import (
    Inconclusive,
    RangeContainsNoBracket,
    SlqError,
    SpecFileError,
)
from .extensions import (
    boundary_residual,
    eigenvalues_shoot,
    extension_from_dict,
    friedrichs_spec,
)
from .forms import (
    FormWindow,
    green_identity_residual,
    q_decorated,
)
from .functions import BumpFn, ExprFunction, polynomial
from .problem import load_problem, validate
from .solutions import construct_basis
from .triplets import (
    decompose,
    form_from_relation,
    pair_from_extension,
    triplet_green_residual,
)

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_INCONCLUSIVE = 3
EXIT_NUMERICAL = 4

REPORT_SCHEMA = "slq-report/1"


def _json_default(obj):
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    return repr(obj)


def _sanitize(value):
    """Make report entries JSON-safe (inf/nan become strings)."""
    if isinstance(value, dict):
        return {str(k): _sanitize(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_sanitize(v) for v in value]
    if isinstance(value, (np.floating, np.integer)):
        value = value.item()
    if isinstance(value, complex) or isinstance(value, np.complexfloating):
        value = complex(value)
        if value.imag == 0.0:
            value = value.real
        else:
            return {"re": _sanitize(value.real), "im": _sanitize(value.imag)}
    if isinstance(value, float) and not math.isfinite(value):
        return repr(value)
    return value


def _emit(report, args):
    text = json.dumps(_sanitize(report), indent=2, sort_keys=True,
                      default=_json_default)
    if getattr(args, "out", None):
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _base_report(command, spec, args):
    return {
        "schema": REPORT_SCHEMA,
        "version": __version__,
        "command": command,
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S"),
        "problem": {
            "name": spec.name,
            "interval": [spec.interval.a, spec.interval.b],
            "p": spec.p.text, "q": spec.q.text, "r": spec.r.text,
            "lambda0": spec.lambda0,
        },
        "tolerance": getattr(args, "tol", None),
    }


def _parse_probe(text):
    try:
        return complex(text.strip().replace("i", "j"))
    except ValueError:
        raise SpecFileError(f"bad probe value {text!r}")


def _parse_window(text):
    parts = text.split(",")
    if len(parts) != 2:
        raise SpecFileError("--window expects 'c,d'")
    try:
        return FormWindow(float(parts[0]), float(parts[1]))
    except ValueError:
        raise SpecFileError(f"bad window {text!r}")


def _classify(spec, probe):
    out = {}
    for e in ("a", "b"):
        out[e] = classify_endpoint(spec, e, probe_z=probe)
    return out


def _build_bases(spec):
    """Bases at both endpoints (classical at regular, reduction otherwise)."""
    return (construct_basis(spec, "a"), construct_basis(spec, "b"))


def _resolve_function(token, spec, bases):
    """Function specifier mini-grammar for --f/--g.

    sin | poly:c0,c1,... | bump:center,width | v1 | v2 |
    u_a | uhat_a | u_b | uhat_b
    """
    token = token.strip()
    if token == "sin":
        return ExprFunction(spec, "sin(x)")
    if token.startswith("poly:"):
        try:
            coeffs = [float(c) for c in token[5:].split(",")]
        except ValueError:
            raise SpecFileError(f"bad poly coefficients in {token!r}")
        return polynomial(spec, coeffs)
    if token.startswith("bump:"):
        parts = token[5:].split(",")
        if len(parts) != 2:
            raise SpecFileError("bump takes center,width")
        try:
            return BumpFn(spec, center=float(parts[0]), width=float(parts[1]))
        except ValueError:
            raise SpecFileError(f"bad bump parameters in {token!r}")
    if token in ("v1", "v2"):
        pp = patched_pair(spec, bases[0], bases[1])
        return pp.v1 if token == "v1" else pp.v2
    named = {"u_a": lambda: bases[0].u, "uhat_a": lambda: bases[0].u_hat,
             "u_b": lambda: bases[1].u, "uhat_b": lambda: bases[1].u_hat}
    if token in named:
        return named[token]()
    raise SpecFileError(f"unknown function specifier {token!r}")


def _regime_info(classification):
    kinds = {e: c.kind for e, c in classification.items()}
    n_lc = sum(1 for k in kinds.values() if k == LIMIT_CIRCLE)
    from .forms import REGIME_LC_LC, REGIME_LC_LP, REGIME_LP_LP
    regime = {2: REGIME_LC_LC, 1: REGIME_LC_LP, 0: REGIME_LP_LP}[n_lc]
    lc_side = None
    if n_lc == 1:
        lc_side = "a" if kinds["a"] == LIMIT_CIRCLE else "b"
    return kinds, regime, lc_side


def _extension_of(spec, ext_doc, classification):
    if ext_doc is not None:
        return extension_from_dict(ext_doc)
    return friedrichs_spec(classification)


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_classify(spec, ext_doc, args):
    report = _base_report("classify", spec, args)
    probe = _parse_probe(args.probe)
    section = {}
    inconclusive = False
    for e in ("a", "b"):
        try:
            c = classify_endpoint(spec, e, probe_z=probe)
            section[e] = {"kind": c.kind, "evidence": c.evidence}
        except Inconclusive as exc:
            inconclusive = True
            section[e] = {"kind": "inconclusive", "detail": str(exc)}
    report["classification"] = section
    _emit(report, args)
    if inconclusive:
        return EXIT_INCONCLUSIVE if args.strict else EXIT_NUMERICAL
    return EXIT_OK


def cmd_basis(spec, ext_doc, args):
    report = _base_report("basis", spec, args)
    section = {}
    for endpoint in ("a", "b"):
        basis = construct_basis(spec, endpoint)
        entry = {
            "endpoint_value": basis.endpoint_value,
            "regular": basis.regular,
            "anchor": basis.anchor,
            "nonvanish_bound": basis.nonvanish_bound,
            "trust_interval": basis.trust_interval,
        }
        if args.csv:
            path = f"{args.csv}_basis_{endpoint}.csv"
            _dump_basis_csv(basis, path)
            entry["csv"] = path
        section[endpoint] = entry
    report["basis"] = section
    _emit(report, args)
    return EXIT_OK


def _dump_basis_csv(basis, path):
    lo, hi = basis.trust_interval or (basis.anchor, basis.nonvanish_bound)
    xs = np.linspace(lo, hi, 101)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x", "u", "u_qd", "uhat", "uhat_qd"])
        for x in xs:
            uu, uu1 = basis.u.pair(x)
            hu, hu1 = basis.u_hat.pair(x)
            writer.writerow([repr(float(x)),
                             repr(float(np.real(uu))),
                             repr(float(np.real(uu1))),
                             repr(float(np.real(hu))),
                             repr(float(np.real(hu1)))])


def cmd_gbv(spec, ext_doc, args):
    report = _base_report("gbv", spec, args)
    bases = _build_bases(spec)
    g = _resolve_function(args.g, spec, bases)
    endpoints = [args.endpoint] if args.endpoint else ["a", "b"]
    section = {}
    for endpoint in endpoints:
        basis = bases[0] if endpoint == "a" else bases[1]
        v = gbv(spec, basis, g, tol=args.tol)
        section[endpoint] = {
            "tilde": v.tilde,
            "tilde_prime": v.tilde_prime,
            "tilde_error": v.tilde_error,
            "tilde_prime_error": v.tilde_prime_error,
            "route": v.route,
            "table": [[x, w] for x, w in v.extrapolation_table],
        }
    report["gbv"] = section
    _emit(report, args)
    return EXIT_OK


def cmd_form(spec, ext_doc, args):
    report = _base_report("form", spec, args)
    classification = _classify(spec, _parse_probe(args.probe))
    ext = _extension_of(spec, ext_doc, classification)
    bases = _build_bases(spec)
    kinds, regime, lc_side = _regime_info(classification)
    if lc_side is not None:
        for basis in bases:
            basis.diagnostics["lc_side"] = lc_side
    f = _resolve_function(args.f, spec, bases)
    g = _resolve_function(args.g, spec, bases)
    window = _parse_window(args.window) if args.window else None
    fv = q_decorated(spec, bases, window, ext, f, g, tol=args.tol)
    report["form"] = {
        "extension": ext.variant,
        "regime": regime,
        "value": fv.value,
        "error": fv.error,
        "window": [fv.window.c, fv.window.d],
        "pieces": dict(fv.pieces),
    }
    _emit(report, args)
    return EXIT_OK


def cmd_green_check(spec, ext_doc, args):
    report = _base_report("green-check", spec, args)
    classification = _classify(spec, _parse_probe(args.probe))
    bases = _build_bases(spec)
    kinds, regime, lc_side = _regime_info(classification)
    if lc_side is not None:
        for basis in bases:
            basis.diagnostics["lc_side"] = lc_side
    f = _resolve_function(args.f, spec, bases)
    g = _resolve_function(args.g, spec, bases)
    window = _parse_window(args.window) if args.window else None
    resid = green_identity_residual(spec, bases, window, f, g, regime=regime)
    passed = bool(abs(resid) <= args.tol)
    report["green_check"] = {
        "regime": regime,
        "residual": resid,
        "abs_residual": abs(resid),
        "tolerance": args.tol,
        "passed": passed,
    }
    _emit(report, args)
    return EXIT_OK if passed else EXIT_NUMERICAL


def cmd_eig(spec, ext_doc, args):
    report = _base_report("eig", spec, args)
    classification = _classify(spec, _parse_probe(args.probe))
    ext = _extension_of(spec, ext_doc, classification)
    try:
        eigs = eigenvalues_shoot(
            spec, ext, (args.lmin, args.lmax), tol=args.tol,
            grid_per_unit=args.grid, classification=classification,
        )
    except RangeContainsNoBracket:
        eigs = []
    report["eigenvalues"] = {
        "extension": ext.variant,
        "range": [args.lmin, args.lmax],
        "values": [
            {"lambda": e.lam, "bracket": list(e.bracket),
             "condition_residual": e.condition_residual}
            for e in eigs
        ],
    }
    _emit(report, args)
    return EXIT_OK


def cmd_triplet(spec, ext_doc, args):
    report = _base_report("triplet", spec, args)
    classification = _classify(spec, _parse_probe(args.probe))
    ext = _extension_of(spec, ext_doc, classification)
    pair = pair_from_extension(ext)
    section = {
        "extension": ext.variant,
        "n": pair.n,
        "A": pair.A,
        "B": pair.B,
    }
    if pair.n > 0:
        rel = decompose(pair)
        section["multivalued_dim"] = rel.multivalued_dim
        section["theta_op"] = rel.theta_op
        section["c_theta"] = rel.c_theta
        section["diagnostics"] = pair.diagnostics
        # Cross-path equality: relation route vs decorated form on samples.
        bases = _build_bases(spec)
        kinds, regime, lc_side = _regime_info(classification)
        samples = _cross_path_samples(spec, args)
        checks = []
        for f, g in samples:
            cache = {}
            try:
                q1 = q_decorated(spec, bases, None, ext, f, g,
                                 gbv_cache=cache).value
                q2 = form_from_relation(spec, bases, None, ext, f, g,
                                        lc_side=lc_side, gbv_cache=cache)
                checks.append({
                    "q_decorated": q1, "form_from_relation": q2,
                    "deviation": abs(q1 - q2),
                })
            except SlqError as exc:
                checks.append({"error": f"{type(exc).__name__}: {exc}"})
        section["cross_path"] = checks
    report["triplet"] = section
    _emit(report, args)
    return EXIT_OK


def _cross_path_samples(spec, args):
    a, b = spec.interval.endpoints()
    mid = spec.interval.interior_point()
    f = polynomial(spec, [1.0, 0.25])
    g = polynomial(spec, [0.5, -0.5])
    width = 1.0 if not (math.isfinite(a) and math.isfinite(b)) \
        else 0.4 * (b - a)
    h = BumpFn(spec, center=mid, width=width)
    return [(f, g), (f, h), (h, h)]


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise SpecFileError(message)


def build_parser():
    parser = _Parser(prog="slq", description=__doc__)
    parser.add_argument("--version", action="version",
                        version=f"slq {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, **extra):
        p = sub.add_parser(name)
        p.set_defaults(fn=fn)
        p.add_argument("specfile")
        p.add_argument("--tol", type=float, default=1e-6)
        p.add_argument("--out", default=None)
        p.add_argument("--csv", default=None)
        p.add_argument("--strict", action="store_true")
        p.add_argument("--probe", default="1j")
        p.add_argument("--window", default=None)
        for flag, kw in extra.items():
            p.add_argument(f"--{flag}", **kw)
        return p

    add("classify", cmd_classify)
    add("basis", cmd_basis)
    add("gbv", cmd_gbv,
        g={"required": True}, endpoint={"choices": ["a", "b"],
                                        "default": None})
    add("form", cmd_form, f={"required": True}, g={"required": True})
    add("green-check", cmd_green_check,
        f={"required": True}, g={"required": True})
    add("eig", cmd_eig,
        lmin={"type": float, "default": 0.0},
        lmax={"type": float, "default": 10.0},
        grid={"type": int, "default": 64})
    add("triplet", cmd_triplet)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SpecFileError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    try:
        spec, ext_doc = load_problem(args.specfile)
        validate(spec)
    except SpecFileError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except SlqError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    try:
        return args.fn(spec, ext_doc, args)
    except SpecFileError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except Inconclusive as exc:
        print(f"inconclusive: {exc}", file=sys.stderr)
        return EXIT_INCONCLUSIVE if args.strict else EXIT_NUMERICAL
    except SlqError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
