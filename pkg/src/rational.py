"""
Exact rational scalars.

Every numeric quantity in the toolkit (values, probabilities, prices, revenues) is a
``fractions.Fraction``. This module adds the text format used in files and reports
("p/q", or "p" when q = 1) and the decimal annotations printed beside it.
"""

import re
from decimal import Decimal, Context, ROUND_HALF_EVEN
from fractions import Fraction
from typing import Union, Iterable, List

from src.errors import ParseError

Rational = Fraction
RationalLike = Union[Fraction, int, str]

_FRACTION_RE = re.compile(r"^\s*([+-]?\d+)\s*/\s*(\d+)\s*$")
_INTEGER_RE = re.compile(r"^\s*[+-]?\d+\s*$")
_DECIMAL_RE =re.compile(r"^\s*[+-]?(\d+(\.\d*)?|\.\d+)\s*$")

OPS = ("+", "-", "*", "/")


def parse_rational(value: RationalLike) -> Fraction:
    """
    Parse a rational from "p/q", an integer string, a finite decimal string, an int or a Fraction.

    Floats are rejected: they are not exact.

    Args:
        value: Input value

    Returns:
        Canonical Fraction

    Raises:
        ParseError: If the value is not an exact rational
    """
    if isinstance(value, bool):
        raise ParseError(f"Not a rational: {value!r}")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if not isinstance(value, str):
        raise ParseError(f"Not a rational (type {type(value).__name__}): {value!r}")

    match = _FRACTION_RE.match(value)
    if match:
        numerator, denominator = int(match.group(1)), int(match.group(2))
        if denominator == 0:
            raise ParseError(f"Zero denominator in {value!r}")
        return Fraction(numerator, denominator)

    if _DECIMAL_RE.match(value):
        return Fraction(Decimal(value.strip()))

    raise ParseError(f"Not a rational: {value!r}")


def parse_int(value: Union[int, str], what: str = "value") -> int:
    """
    Parse an integer from an int or an integer string.

    Floats (even integral ones) and booleans are rejected rather than truncated.

    Raises:
        ParseError: If the value is not an exact integer
    """
    if isinstance(value, bool):
        raise ParseError(f"{what} must be an integer, got {value!r}")
    if isinstance(value, int):
        return value
    if isinstance(value, str) and _INTEGER_RE.match(value):
        return int(value)
    raise ParseError(f"{what} must be an integer, got {value!r}")


def format_rational(x: Fraction) -> str:
    """Serialize as "p/q", or "p" when the denominator is 1."""
    x = Fraction(x)
    if x.denominator == 1:
        return str(x.numerator)
    return f"{x.numerator}/{x.denominator}"


def format_vector(xs: Iterable[Fraction]) -> List[str]:
    """Serialize a vector of rationals."""
    return [format_rational(x) for x in xs]


def to_decimal_string(x: Fraction, digits: int = 12) -> str:
    """
    Decimal approximation of x with the given number of significant digits.

    Annotation only; never fed back into a comparison.

    Args:
        x: Exact value
        digits: Significant digits

    Returns:
        Decimal string
    """
    x = Fraction(x)
    context = Context(prec=max(1, digits), rounding=ROUND_HALF_EVEN)
    approx = context.divide(Decimal(x.numerator), Decimal(x.denominator))
    return format(approx, "g") if abs(approx.adjusted()) > digits else format(approx, "f")


def rational_arith(a: Fraction, b: Fraction, op: str) -> Fraction:
    """
    Exact binary arithmetic.

    Args:
        a: Left operand
        b: Right operand
        op: One of "+", "-", "*", "/"

    Returns:
        Canonical result

    Raises:
        ZeroDivisionError: For division by zero
        ValueError: For an unknown operator
    """
    a, b = Fraction(a), Fraction(b)
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    if op == "/":
        if b == 0:
            raise ZeroDivisionError(f"division of {format_rational(a)} by zero")
        return a / b
    raise ValueError(f"Unknown operator {op!r}; expected one of {OPS}")
