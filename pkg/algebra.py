"""
Sparse multivariate polynomials in h1..h10 over interchangeable coefficient fields.

PrimeField is the exact field Z_p used to record solver templates, BigFloatField
is binary floating point of configurable precision used to replay them, and
PairedField carries one element of each side by side so that a replay makes its
zero decisions on the Z_p side only.
"""

from __future__ import annotations

import enum
import logging
from fractions import Fraction
from typing import Any, Dict, Mapping, Protocol, Sequence, Tuple

import mpmath
from mpmath import libmp
from sympy import isprime, mod_inverse
from sympy.polys.monomials import monomial_mul

from data_model import (
    FORMAT_VERSION,
    NVARS,
    FieldSpec,
    Monomial,
    MonomialOrder,
    PolynomialRecord,
    PolynomialSystemRecord,
)

logger = logging.getLogger(__name__)

MODULUS = 332251314113

if not isprime(MODULUS):
    raise RuntimeError(f"Field modulus {MODULUS} is not prime")

VARIABLE_NAMES = tuple(f"h{k}" for k in range(1, NVARS + 1))
CONSTANT: Monomial = (0,) * NVARS


class ZeroInverse(ZeroDivisionError):
    """Inverse of zero requested in Z_p."""


class DivisionByZeroCoefficient(ZeroDivisionError):
    """A floating point pivot is exactly zero although its Z_p counterpart is not."""


class Ordering(enum.IntEnum):
    LESS = -1
    EQUAL = 0
    GREATER = 1


def parse_monomial(text: str) -> Monomial:
    """Parse "1", "h5", "h5^2*h6" into an exponent vector."""
    exponents = [0] * NVARS
    text = text.strip()
    if text == "1":
        return tuple(exponents)
    for factor in text.split("*"):
        name, _, power = factor.strip().partition("^")
        if name not in VARIABLE_NAMES:
            raise ValueError(f"Unknown variable {name!r} in monomial {text!r}")
        exponents[VARIABLE_NAMES.index(name)] += int(power) if power else 1
    return tuple(exponents)


def format_monomial(m: Monomial) -> str:
    factors = []
    for name, e in zip(VARIABLE_NAMES, m):
        if e == 1:
            factors.append(name)
        elif e > 1:
            factors.append(f"{name}^{e}")
    return "*".join(factors) if factors else "1"


def monomial_compare(a: Monomial, b: Monomial, order: MonomialOrder) -> Ordering:
    key = order.sort_key()
    ka, kb = key(a), key(b)
    if ka == kb:
        return Ordering.EQUAL
    return Ordering.GREATER if ka > kb else Ordering.LESS


class PrimeFieldElement:
    """Canonical representative in [0, p) of an element of Z_p."""
    __slots__ = ("value",)

    def __init__(self, value: int):
        self.value = value % MODULUS

    def __add__(self, other: "PrimeFieldElement") -> "PrimeFieldElement":
        return PrimeFieldElement(self.value + other.value)

    def __sub__(self, other: "PrimeFieldElement") -> "PrimeFieldElement":
        return PrimeFieldElement(self.value - other.value)

    def __mul__(self, other: "PrimeFieldElement") -> "PrimeFieldElement":
        return PrimeFieldElement(self.value * other.value)

    def __neg__(self) -> "PrimeFieldElement":
        return PrimeFieldElement(-self.value)

    def __truediv__(self, other: "PrimeFieldElement") -> "PrimeFieldElement":
        return self * field_inverse(other)

    def __eq__(self, other: object) -> bool:
        if isinstance(other, PrimeFieldElement):
            return self.value == other.value
        if isinstance(other, int):
            return self.value == other % MODULUS
        return NotImplemented

    def __hash__(self) -> int:
        return hash(self.value)

    def __int__(self) -> int:
        return self.value

    def __repr__(self) -> str:
        return f"PrimeFieldElement({self.value})"


def field_inverse(a: PrimeFieldElement) -> PrimeFieldElement:
    if a.value == 0:
        raise ZeroInverse("0 has no inverse modulo p")
    return PrimeFieldElement(mod_inverse(a.value, MODULUS))


class CoefficientField(Protocol):
    """Operations the polynomial and basis code needs from a coefficient field."""

    zero: Any
    one: Any

    def add(self, a: Any, b: Any) -> Any: ...
    def sub(self, a: Any, b: Any) -> Any: ...
    def neg(self, a: Any) -> Any: ...
    def mul(self, a: Any, b: Any) -> Any: ...
    def inv(self, a: Any) -> Any: ...
    def submul(self, a: Any, c: Any, b: Any) -> Any: ...
    def is_zero(self, a: Any) -> bool: ...
    def from_number(self, x: Any) -> Any: ...
    def monic_scale(self, lc: Any) -> Any: ...
    def to_text(self, a: Any) -> str: ...
    def from_text(self, text: str) -> Any: ...
    def spec(self) -> FieldSpec: ...


class PrimeField:
    """Z_p on raw Python ints in [0, p)."""

    def __init__(self, modulus: int = MODULUS):
        if modulus != MODULUS and not isprime(modulus):
            raise ValueError(f"Modulus {modulus} is not prime")
        self.modulus = modulus
        self.zero = 0
        self.one = 1

    def __eq__(self, other: object) -> bool:
        return isinstance(other, PrimeField) and other.modulus == self.modulus

    def __hash__(self) -> int:
        return hash(("zp", self.modulus))

    def __repr__(self) -> str:
        return f"PrimeField({self.modulus})"

    def add(self, a: int, b: int) -> int:
        return (a + b) % self.modulus

    def sub(self, a: int, b: int) -> int:
        return (a - b) % self.modulus

    def neg(self, a: int) -> int:
        return -a % self.modulus

    def mul(self, a: int, b: int) -> int:
        return a * b % self.modulus

    def inv(self, a: int) -> int:
        if a % self.modulus == 0:
            raise ZeroInverse("0 has no inverse modulo p")
        return mod_inverse(a, self.modulus)

    def submul(self, a: int, c: int, b: int) -> int:
        return (a - c * b) % self.modulus

    def is_zero(self, a: int) -> bool:
        return a == 0

    def from_number(self, x: Any) -> int:
        if isinstance(x, PrimeFieldElement):
            return x.value % self.modulus
        if isinstance(x, int):
            return x % self.modulus
        if isinstance(x, Fraction):
            return x.numerator * self.inv(x.denominator % self.modulus) % self.modulus
        if isinstance(x, str):
            return self.from_number(Fraction(x))
        raise TypeError(f"Cannot map {type(x).__name__} into Z_p")

    def monic_scale(self, lc: int) -> int:
        return self.inv(lc)

    def to_text(self, a: int) -> str:
        return str(a)

    def from_text(self, text: str) -> int:
        value = int(text)
        if not 0 <= value < self.modulus:
            raise ValueError(f"Z_p coefficient {text} outside [0, p)")
        return value

    def display(self, a: int) -> str:
        return str(a)

    def spec(self) -> FieldSpec:
        return FieldSpec(kind="zp", modulus=self.modulus)


class BigFloatField:
    """Binary floating point with a fixed mantissa length, backed by a private mpmath context."""

    def __init__(self, precision_bits: int):
        if precision_bits < 2:
            raise ValueError(f"precision_bits must be at least 2, got {precision_bits}")
        self.precision_bits = precision_bits
        self.context = mpmath.MPContext()
        self.context.prec = precision_bits
        self.zero = self.context.mpf(0)
        self.one = self.context.mpf(1)
        self._digits = libmp.repr_dps(precision_bits)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, BigFloatField) and other.precision_bits == self.precision_bits

    def __hash__(self) -> int:
        return hash(("bigfloat", self.precision_bits))

    def __repr__(self) -> str:
        return f"BigFloatField({self.precision_bits})"

    def add(self, a, b):
        return a + b

    def sub(self, a, b):
        return a - b

    def neg(self, a):
        return -a

    def mul(self, a, b):
        return a * b

    def inv(self, a):
        if not a:
            raise DivisionByZeroCoefficient("division by an exactly zero floating point coefficient")
        return self.one / a

    def submul(self, a, c, b):
        return a - c * b

    def is_zero(self, a) -> bool:
        return not a

    def from_number(self, x: Any):
        if isinstance(x, Fraction):
            return self.context.mpf(x.numerator) / x.denominator
        if isinstance(x, PrimeFieldElement):
            raise TypeError("Z_p elements have no floating point value")
        return self.context.mpf(x)

    def monic_scale(self, lc):
        return self.one

    def sqrt(self, a):
        return self.context.sqrt(a)

    def to_text(self, a) -> str:
        return libmp.to_str(a._mpf_, self._digits)

    def from_text(self, text: str):
        return self.context.mpf(text)

    def display(self, a) -> str:
        return mpmath.nstr(a, 10)

    def spec(self) -> FieldSpec:
        return FieldSpec(kind="bigfloat", precision_bits=self.precision_bits)


class PairedField:
    """Pairs (Z_p, float) evaluated in lockstep.

    Zero tests look at the Z_p component only, so a monomial whose Z_p
    coefficient cancels is dropped together with its floating point residue.
    """

    def __init__(self, template: PrimeField, replay: BigFloatField):
        self.template = template
        self.replay = replay
        self.zero = (0, replay.zero)
        self.one = (1, replay.one)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, PairedField) and other.template == self.template and other.replay == self.replay

    def __hash__(self) -> int:
        return hash(("paired", self.template, self.replay))

    def add(self, a, b):
        return ((a[0] + b[0]) % self.template.modulus, a[1] + b[1])

    def sub(self, a, b):
        return ((a[0] - b[0]) % self.template.modulus, a[1] - b[1])

    def neg(self, a):
        return (-a[0] % self.template.modulus, -a[1])

    def mul(self, a, b):
        return (a[0] * b[0] % self.template.modulus, a[1] * b[1])

    def inv(self, a):
        return (self.template.inv(a[0]), self.replay.inv(a[1]))

    def submul(self, a, c, b):
        return ((a[0] - c[0] * b[0]) % self.template.modulus, a[1] - c[1] * b[1])

    def is_zero(self, a) -> bool:
        return a[0] == 0

    def from_number(self, x: Any):
        return (self.template.from_number(x), self.replay.from_number(x))

    def monic_scale(self, lc):
        return (self.template.inv(lc[0]), self.replay.one)

    def to_text(self, a) -> str:
        return f"{self.template.to_text(a[0])}|{self.replay.to_text(a[1])}"

    def from_text(self, text: str):
        zp, _, value = text.partition("|")
        return (self.template.from_text(zp), self.replay.from_text(value))

    def display(self, a) -> str:
        return f"({a[0]}|{self.replay.display(a[1])})"

    def spec(self) -> FieldSpec:
        raise TypeError("paired coefficients are not serialized")


def field_from_spec(spec: FieldSpec):
    if spec.kind == "zp":
        return PrimeField(spec.modulus)
    return BigFloatField(spec.precision_bits)


class PolynomialRing:
    """Coefficient field plus monomial order; polynomials from one ring share both."""

    def __init__(self, field, order: MonomialOrder | None = None):
        self.field = field
        self.order = order if order is not None else MonomialOrder()
        self.key = self.order.sort_key()
        self.heap_key = self.order.heap_key()

    def __eq__(self, other: object) -> bool:
        return isinstance(other, PolynomialRing) and other.field == self.field and other.order == self.order

    def __hash__(self) -> int:
        return hash((self.field, self.order))

    def __repr__(self) -> str:
        return f"PolynomialRing({self.field!r}, {self.order.kind}, {self.order.variables})"

    def with_order(self, order: MonomialOrder) -> "PolynomialRing":
        return PolynomialRing(self.field, order)

    @property
    def zero(self) -> "Polynomial":
        return Polynomial(self, ())

    @property
    def one(self) -> "Polynomial":
        return Polynomial(self, ((self.field.one, CONSTANT),))

    def gen(self, name: str) -> "Polynomial":
        return Polynomial(self, ((self.field.one, parse_monomial(name)),))

    def from_dict(self, terms: Mapping[Monomial, Any]) -> "Polynomial":
        """Polynomial from {monomial: coefficient}; zero coefficients are dropped."""
        is_zero = self.field.is_zero
        kept = [(c, m) for m, c in terms.items() if not is_zero(c)]
        kept.sort(key=lambda t: self.key(t[1]), reverse=True)
        return Polynomial(self, tuple(kept))

    def from_numbers(self, terms: Mapping[Monomial, Any]) -> "Polynomial":
        """Like from_dict, mapping ints, Fractions or decimal strings into the field first."""
        return self.from_dict({m: self.field.from_number(c) for m, c in terms.items()})

    def convert(self, poly: "Polynomial") -> "Polynomial":
        """Re-sort a polynomial of the same field under this ring's order."""
        if poly.ring.field != self.field:
            raise ValueError("cannot convert between coefficient fields")
        if poly.ring == self:
            return poly
        return self.from_dict(poly.to_dict())

    def parse(self, text: str) -> "Polynomial":
        """Parse "3*h1*h2^2 - 5*h3 + 1" with integer or decimal coefficients."""
        terms: Dict[Monomial, Any] = {}
        normalized = text.replace(" ", "").replace("-", "+-")
        for chunk in filter(None, normalized.split("+")):
            sign = -1 if chunk.startswith("-") else 1
            chunk = chunk.lstrip("-")
            factors = chunk.split("*")
            coefficient = Fraction(sign)
            names = []
            for factor in factors:
                if factor.startswith("h"):
                    names.append(factor)
                else:
                    coefficient *= Fraction(factor)
            m = parse_monomial("*".join(names)) if names else CONSTANT
            c = self.field.from_number(coefficient)
            terms[m] = self.field.add(terms[m], c) if m in terms else c
        return self.from_dict(terms)


class Polynomial:
    """Immutable sparse polynomial; terms are (coefficient, monomial) pairs sorted descending."""
    __slots__ = ("ring", "terms")

    def __init__(self, ring: PolynomialRing, terms: Tuple[Tuple[Any, Monomial], ...]):
        self.ring = ring
        self.terms = terms

    @property
    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self) -> bool:
        return bool(self.terms)

    def __len__(self) -> int:
        return len(self.terms)

    @property
    def leading_monomial(self) -> Monomial:
        if not self.terms:
            raise ValueError("zero polynomial has no leading monomial")
        return self.terms[0][1]

    @property
    def leading_coefficient(self) -> Any:
        if not self.terms:
            raise ValueError("zero polynomial has no leading coefficient")
        return self.terms[0][0]

    @property
    def support(self) -> Tuple[Monomial, ...]:
        return tuple(m for _, m in self.terms)

    @property
    def degree(self) -> int:
        return max((sum(m) for _, m in self.terms), default=-1)

    def to_dict(self) -> Dict[Monomial, Any]:
        return {m: c for c, m in self.terms}

    def coefficient(self, m: Monomial) -> Any:
        for c, mm in self.terms:
            if mm == m:
                return c
        return self.ring.field.zero

    def __add__(self, other: "Polynomial") -> "Polynomial":
        return poly_add(self, other)

    def __neg__(self) -> "Polynomial":
        neg = self.ring.field.neg
        return Polynomial(self.ring, tuple((neg(c), m) for c, m in self.terms))

    def __sub__(self, other: "Polynomial") -> "Polynomial":
        return poly_add(self, -other)

    def __mul__(self, other: "Polynomial") -> "Polynomial":
        return poly_mul(self, other)

    def scale(self, c: Any) -> "Polynomial":
        return poly_mul_term(self, c, CONSTANT)

    def monic(self) -> "Polynomial":
        if not self.terms:
            return self
        return self.scale(self.ring.field.inv(self.leading_coefficient))

    def evaluate(self, values: Sequence[Any]) -> Any:
        return poly_evaluate(self, values)

    def to_record(self) -> PolynomialRecord:
        to_text = self.ring.field.to_text
        return [(to_text(c), tuple(m)) for c, m in self.terms]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Polynomial):
            return NotImplemented
        return self.ring == other.ring and self.terms == other.terms

    __hash__ = None

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        display = getattr(self.ring.field, "display", str)
        parts = []
        for c, m in self.terms:
            text = display(c)
            parts.append(text if m == CONSTANT else f"{text}*{format_monomial(m)}")
        return " + ".join(parts)

    def __repr__(self) -> str:
        return f"Polynomial({self})"


def _check_same_ring(f: Polynomial, g: Polynomial) -> None:
    if f.ring != g.ring:
        raise ValueError(f"polynomials live in different rings: {f.ring!r} vs {g.ring!r}")


def poly_add(f: Polynomial, g: Polynomial) -> Polynomial:
    _check_same_ring(f, g)
    field = f.ring.field
    merged = f.to_dict()
    for c, m in g.terms:
        old = merged.get(m)
        merged[m] = c if old is None else field.add(old, c)
    return f.ring.from_dict(merged)


def poly_mul_term(f: Polynomial, c: Any, m: Monomial) -> Polynomial:
    """f * c * m; the order is multiplicative so the term order is preserved."""
    field = f.ring.field
    if field.is_zero(c):
        return f.ring.zero
    return Polynomial(f.ring, tuple((field.mul(c, fc), monomial_mul(fm, m)) for fc, fm in f.terms))


def poly_mul(f: Polynomial, g: Polynomial) -> Polynomial:
    _check_same_ring(f, g)
    field = f.ring.field
    product: Dict[Monomial, Any] = {}
    for gc, gm in g.terms:
        for fc, fm in f.terms:
            m = monomial_mul(fm, gm)
            v = field.mul(fc, gc)
            old = product.get(m)
            product[m] = v if old is None else field.add(old, v)
    return f.ring.from_dict(product)


def _power(field, v, e: int):
    result = field.one
    for _ in range(e):
        result = field.mul(result, v)
    return result


def poly_evaluate(f: Polynomial, values: Sequence[Any]) -> Any:
    """Value of f at (h1, ..., h10); values are field elements."""
    if len(values) != NVARS:
        raise ValueError(f"expected {NVARS} values, got {len(values)}")
    field = f.ring.field
    total = field.zero
    for c, m in f.terms:
        term = c
        for v, e in zip(values, m):
            if e:
                term = field.mul(term, _power(field, v, e))
        total = field.add(total, term)
    return total


def system_to_record(polys: Sequence[Polynomial]) -> PolynomialSystemRecord:
    if not polys:
        raise ValueError("empty polynomial system")
    ring = polys[0].ring
    return PolynomialSystemRecord(
        format_version=FORMAT_VERSION,
        field=ring.field.spec(),
        order=ring.order,
        polynomials=[p.to_record() for p in polys],
    )


def polynomial_from_record(ring: PolynomialRing, record: PolynomialRecord) -> Polynomial:
    field = ring.field
    terms = []
    for text, m in record:
        m = tuple(m)
        if len(m) != NVARS:
            raise ValueError(f"monomial {m} must have {NVARS} exponents")
        c = field.from_text(text)
        if field.is_zero(c):
            raise ValueError(f"polynomial record has a zero coefficient at {m}")
        terms.append((c, m))
    poly = Polynomial(ring, tuple(terms))
    keys = [ring.key(m) for _, m in terms]
    if any(a <= b for a, b in zip(keys, keys[1:])):
        raise ValueError("polynomial record terms are not strictly descending")
    return poly


def system_from_record(record: PolynomialSystemRecord) -> list[Polynomial]:
    if record.format_version != FORMAT_VERSION:
        raise ValueError(f"Unsupported format version {record.format_version}")
    ring = PolynomialRing(field_from_spec(record.field), record.order)
    return [polynomial_from_record(ring, p) for p in record.polynomials]
