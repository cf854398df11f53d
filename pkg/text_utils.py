from decimal import Decimal, Inexact, localcontext
from fractions import Fraction

import mpmath


def parse_decimal(text):
    """Parse a decimal string such as "-1.25", "3e-7" or "12" into an exact Fraction."""
    if isinstance(text, Fraction):
        return text
    try:
        return Fraction(str(text).strip())
    except (ValueError, ZeroDivisionError) as e:
        raise ValueError(f"Not a decimal number: {text!r}") from e


def _finite_digits(q):
    den = q.denominator
    twos = fives = 0
    while den % 2 == 0:
        den //= 2
        twos += 1
    while den % 5 == 0:
        den //= 5
        fives += 1
    if den != 1:
        raise ValueError(f"{q} has no finite decimal expansion; pass digits to round it")
    scaled = q * 10 ** max(twos, fives)
    return len(str(abs(scaled.numerator))) + 1


def format_decimal(value, digits=None):
    """Write a rational as a decimal string.

    Without `digits` the value must have a finite expansion and is written exactly.
    With `digits` it is rounded half-even to that many significant digits.
    """
    q = Fraction(value)
    if q.denominator == 1:
        return str(q.numerator)
    with localcontext() as ctx:
        ctx.prec = digits if digits is not None else _finite_digits(q)
        ctx.traps[Inexact] = digits is None
        return str(Decimal(q.numerator) / Decimal(q.denominator))


def mpf_to_fraction(x):
    """Exact rational value of a binary float."""
    sign, man, exp, _ = x._mpf_
    man = int(man)
    if sign:
        man = -man
    if exp >= 0:
        return Fraction(man * 2 ** exp)
    return Fraction(man, 2 ** -exp)


def short_number(x, digits=4):
    """Compact human-readable rendering for logs and reports."""
    if x is None:
        return "-"
    if isinstance(x, Fraction):
        x = mpmath.mpf(x.numerator) / x.denominator
    return mpmath.nstr(x, digits)
