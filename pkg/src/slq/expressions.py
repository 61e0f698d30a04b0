"""Coefficient expressions: parsing, exact differentiation, fast evaluation.

Coefficient functions are given as infix strings over the variable ``x``,
numeric constants, the arithmetic operators (including ``^`` or ``**`` for
powers) and the functions ``exp``, ``log``, ``sin``, ``cos``.  They are parsed
into a small tree that supports exact symbolic differentiation, so quantities
like p'(x) are available without finite differencing.
"""

from __future__ import annotations

import ast
import math
from dataclasses import dataclass

import numpy as np

from .errors import SpecFileError

_ALLOWED_FUNCS = ("exp", "log", "sin", "cos", "sqrt")
_ALLOWED_NAMES = {"x", "pi", "e"}


class Node:
    def diff(self) -> "Node":
        raise NotImplementedError

    def emit(self) -> str:
        raise NotImplementedError


@dataclass(frozen=True)
class Const(Node):
    value: float

    def diff(self):
        return Const(0.0)

    def emit(self):
        return repr(float(self.value))


@dataclass(frozen=True)
class Var(Node):
    def diff(self):
        return Const(1.0)

    def emit(self):
        return "x"


def _is_const(n: Node, v=None) -> bool:
    return isinstance(n, Const) and (v is None or n.value == v)


@dataclass(frozen=True)
class BinOp(Node):
    op: str
    left: Node
    right: Node

    def emit(self):
        return f"({self.left.emit()} {self.op} {self.right.emit()})"

    def diff(self):
        ld, rd = self.left.diff(), self.right.diff()
        if self.op == "+":
            return add(ld, rd)
        if self.op == "-":
            return sub(ld, rd)
        if self.op == "*":
            return add(mul(ld, self.right), mul(self.left, rd))
        if self.op == "/":
            num = sub(mul(ld, self.right), mul(self.left, rd))
            return BinOp("/", num, mul(self.right, self.right))
        if self.op == "**":
            # General power; constant exponents use the monomial rule.
            if _is_const(self.right):
                k = self.right.value
                return mul(
                    mul(Const(k), BinOp("**", self.left, Const(k - 1.0))), ld
                )
            if _is_const(self.left):
                return mul(self, mul(Fun("log", self.left), rd))
            # f^g -> f^g * (g' log f + g f'/f)
            inner = add(
                mul(rd, Fun("log", self.left)),
                BinOp("/", mul(self.right, ld), self.left),
            )
            return mul(self, inner)
        raise AssertionError(self.op)


@dataclass(frozen=True)
class Fun(Node):
    name: str
    arg: Node

    def emit(self):
        return f"{self.name}({self.arg.emit()})"

    def diff(self):
        d = self.arg.diff()
        if self.name == "exp":
            return mul(self, d)
        if self.name == "log":
            return BinOp("/", d, self.arg)
        if self.name == "sin":
            return mul(Fun("cos", self.arg), d)
        if self.name == "cos":
            return mul(neg(Fun("sin", self.arg)), d)
        if self.name == "sqrt":
            return BinOp("/", d, mul(Const(2.0), self))
        raise AssertionError(self.name)


def add(a: Node, b: Node) -> Node:
    if _is_const(a, 0.0):
        return b
    if _is_const(b, 0.0):
        return a
    if _is_const(a) and _is_const(b):
        return Const(a.value + b.value)
    return BinOp("+", a, b)


def sub(a: Node, b: Node) -> Node:
    if _is_const(b, 0.0):
        return a
    if _is_const(a) and _is_const(b):
        return Const(a.value - b.value)
    return BinOp("-", a, b)


def mul(a: Node, b: Node) -> Node:
    if _is_const(a, 0.0) or _is_const(b, 0.0):
        return Const(0.0)
    if _is_const(a, 1.0):
        return b
    if _is_const(b, 1.0):
        return a
    if _is_const(a) and _is_const(b):
        return Const(a.value * b.value)
    return BinOp("*", a, b)


def neg(a: Node) -> Node:
    if _is_const(a):
        return Const(-a.value)
    return mul(Const(-1.0), a)


def _convert(node: ast.AST) -> Node:
    if isinstance(node, ast.Expression):
        return _convert(node.body)
    if isinstance(node, ast.Constant):
        if not isinstance(node.value, (int, float)):
            raise SpecFileError(f"non-numeric constant {node.value!r}")
        return Const(float(node.value))
    if isinstance(node, ast.Name):
        if node.id == "x":
            return Var()
        if node.id == "pi":
            return Const(math.pi)
        if node.id == "e":
            return Const(math.e)
        raise SpecFileError(f"unknown name {node.id!r} in expression")
    if isinstance(node, ast.UnaryOp):
        if isinstance(node.op, ast.USub):
            return neg(_convert(node.operand))
        if isinstance(node.op, ast.UAdd):
            return _convert(node.operand)
        raise SpecFileError("unsupported unary operator")
    if isinstance(node, ast.BinOp):
        ops = {
            ast.Add: "+",
            ast.Sub: "-",
            ast.Mult: "*",
            ast.Div: "/",
            ast.Pow: "**",
        }
        op = ops.get(type(node.op))
        if op is None:
            raise SpecFileError("unsupported binary operator")
        left, right = _convert(node.left), _convert(node.right)
        if _is_const(left) and _is_const(right):
            return Const(
                eval(f"{left.value!r} {op} {right.value!r}")  # noqa: S307
            )
        return BinOp(op, left, right)
    if isinstance(node, ast.Call):
        if not isinstance(node.func, ast.Name) or node.keywords:
            raise SpecFileError("unsupported function call form")
        name = node.func.id
        if name not in _ALLOWED_FUNCS:
            raise SpecFileError(f"unknown function {name!r}")
        if len(node.args) != 1:
            raise SpecFileError(f"{name} takes exactly one argument")
        return Fun(name, _convert(node.args[0]))
    raise SpecFileError(f"unsupported syntax: {ast.dump(node)}")


_SCALAR_NS = {f: getattr(math, f) for f in _ALLOWED_FUNCS}
_ARRAY_NS = {f: getattr(np, f) for f in _ALLOWED_FUNCS}


class Expr:
    """A compiled coefficient expression with exact derivatives."""

    def __init__(self, root: Node, text: str | None = None):
        self.root = root
        self.text = text if text is not None else root.emit()
        src = root.emit()
        self._scalar = eval(  # noqa: S307
            compile(f"lambda x: {src}", "<expr>", "eval"), dict(_SCALAR_NS)
        )
        self._array = eval(  # noqa: S307
            compile(f"lambda x: {src}", "<expr>", "eval"), dict(_ARRAY_NS)
        )
        self._deriv: Expr | None = None

    @classmethod
    def parse(cls, text: str) -> "Expr":
        cleaned = text.replace("^", "**")
        try:
            tree = ast.parse(cleaned, mode="eval")
        except SyntaxError as exc:
            raise SpecFileError(f"cannot parse expression {text!r}: {exc}")
        return cls(_convert(tree), text=text)

    @classmethod
    def constant(cls, value: float) -> "Expr":
        return cls(Const(float(value)), text=repr(float(value)))

    def __call__(self, x):
        if isinstance(x, np.ndarray):
            out = self._array(x)
            if np.isscalar(out) or getattr(out, "shape", None) == ():
                out = np.full_like(x, float(out), dtype=float)
            return out
        try:
            return self._scalar(x)
        except ValueError as exc:  # math domain error -> NaN for diagnostics
            raise SpecFileError(
                f"expression {self.text!r} undefined at x={x}: {exc}"
            ) from exc

    def deriv(self) -> "Expr":
        if self._deriv is None:
            self._deriv = Expr(self.root.diff())
        return self._deriv

    def is_constant(self) -> bool:
        return isinstance(self.root, Const)

    def __repr__(self):
        return f"Expr({self.text!r})"
