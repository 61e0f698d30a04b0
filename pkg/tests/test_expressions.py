"""Expression language: parsing, evaluation, exact differentiation."""

import math

import pytest

from slq.errors import SpecFileError
from slq.expressions import Expr


def test_polynomial_evaluation():
    e = Expr.parse("1 + 2*x + 3*x**2")
    assert e(2.0) == 1 + 4 + 12


def test_functions_and_constants():
    e = Expr.parse("sin(x)*exp(-x)")
    x = 0.7
    assert e(x) == pytest.approx(math.sin(x) * math.exp(-x), rel=1e-15)


def test_derivative_power_rule():
    e = Expr.parse("x**3")
    d = e.deriv()
    assert d(2.0) == pytest.approx(12.0, rel=1e-15)


def test_derivative_chain_rule():
    e = Expr.parse("cos(x**2)")
    d = e.deriv()
    x = 1.3
    assert d(x) == pytest.approx(-2 * x * math.sin(x * x), rel=1e-13)


def test_second_derivative():
    e = Expr.parse("exp(2*x)")
    d2 = e.deriv().deriv()
    assert d2(0.5) == pytest.approx(4 * math.exp(1.0), rel=1e-13)


def test_factored_product():
    e = Expr.parse("(1-x)*(1+x)")
    assert e(0.999999999) == pytest.approx(1 - 0.999999999 ** 2, rel=1e-6)
    assert e(1.0) == 0.0


def test_division_by_zero_raises():
    e = Expr.parse("1/x")
    with pytest.raises(ZeroDivisionError):
        e(0.0)


def test_unknown_name_rejected():
    with pytest.raises(SpecFileError):
        Expr.parse("y + 1")


def test_unknown_function_rejected():
    with pytest.raises(SpecFileError):
        Expr.parse("tan(x)")


def test_malformed_expression_rejected():
    with pytest.raises(SpecFileError):
        Expr.parse("1 +* 2")
