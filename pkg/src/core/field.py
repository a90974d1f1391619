"""
Exact arithmetic of the rational field used for every weight.

Weights are ``fractions.Fraction`` values: always in lowest terms with a
positive denominator. Downstream modules only use the operations below and
the constants ZERO and ONE.
"""

from fractions import Fraction
from typing import Iterable, Union

from src.core.errors import FormatException

Rational = Fraction

ZERO = Fraction(0)
ONE = Fraction(1)

WeightLike = Union[Fraction, int, str]


def rational(value: WeightLike) -> Fraction:
    """Coerce an int, Fraction or text such as ``-2`` or ``3/2`` to a Fraction."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise FormatException(f"invalid weight {value!r}")
    if isinstance(value, int):
        return Fraction(value)
    return parse_rational(str(value))


def parse_rational(text: str) -> Fraction:
    """
    Parse ``p/q`` or an integer literal.

    Raises:
        FormatException: For anything else, including decimals and zero denominators.
    """
    text = text.strip()
    numerator, sep, denominator = text.partition("/")
    try:
        if not sep:
            return Fraction(int(numerator))
        return Fraction(int(numerator), int(denominator))
    except ValueError:
        raise FormatException(f"invalid rational {text!r}")
    except ZeroDivisionError:
        raise FormatException(f"zero denominator in {text!r}")


def format_rational(value: Fraction) -> str:
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


def add(a: Fraction, b: Fraction) -> Fraction:
    return a + b


def mul(a: Fraction, b: Fraction) -> Fraction:
    return a * b


def neg(a: Fraction) -> Fraction:
    return -a


def inv(a: Fraction) -> Fraction:
    """Multiplicative inverse; raises ZeroDivisionError for 0."""
    if a == 0:
        raise ZeroDivisionError("0 has no multiplicative inverse")
    return 1 / a


def fsum(values: Iterable[Fraction]) -> Fraction:
    total = ZERO
    for value in values:
        total += value
    return total


def fprod(values: Iterable[Fraction]) -> Fraction:
    total = ONE
    for value in values:
        total *= value
    return total
