"""Tests for decimal parsing and formatting helpers."""

from fractions import Fraction

import mpmath
import pytest

from text_utils import format_decimal, mpf_to_fraction, parse_decimal, short_number


def test_parse_decimal():
    assert parse_decimal("-1.25") == Fraction(-5, 4)
    assert parse_decimal("3e-7") == Fraction(3, 10 ** 7)
    with pytest.raises(ValueError):
        parse_decimal("1.2.3")


def test_format_decimal_exact_and_rounded():
    assert format_decimal(Fraction(-5, 4)) == "-1.25"
    assert format_decimal(Fraction(12)) == "12"
    assert format_decimal(Fraction(1, 3), 5) == "0.33333"
    with pytest.raises(ValueError):
        format_decimal(Fraction(1, 3))


@pytest.mark.parametrize("value", ["0.1", "-2.5", "1e-30", "123456789.987654321"])
def test_mpf_to_fraction_has_plain_int_parts(value):
    ctx = mpmath.MPContext()
    ctx.prec = 200
    x = ctx.mpf(value)
    q = mpf_to_fraction(x)
    assert type(q.numerator) is int and type(q.denominator) is int
    assert ctx.mpf(q.numerator) / q.denominator == x
    assert abs(Fraction(format_decimal(q, 30)) - Fraction(value)) < Fraction(abs(Fraction(value)), 10 ** 25)
    assert Fraction(format_decimal(q)) == q


def test_short_number():
    assert short_number(None) == "-"
    assert short_number(Fraction(1, 4)) == "0.25"
