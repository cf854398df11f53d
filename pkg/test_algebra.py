"""Tests for coefficient fields, monomial orders and polynomial arithmetic."""

import json
from fractions import Fraction

import numpy as np
import pytest
from sympy.polys.monomials import monomial_mul

from algebra import (
    CONSTANT,
    MODULUS,
    BigFloatField,
    DivisionByZeroCoefficient,
    Ordering,
    PairedField,
    PolynomialRing,
    PrimeField,
    PrimeFieldElement,
    ZeroInverse,
    field_inverse,
    format_monomial,
    monomial_compare,
    parse_monomial,
    poly_evaluate,
    poly_mul,
    poly_mul_term,
    system_from_record,
    system_to_record,
)
from data_model import MonomialOrder, PolynomialSystemRecord


@pytest.fixture
def zp_ring():
    return PolynomialRing(PrimeField())


def test_inverse_of_two():
    assert field_inverse(PrimeFieldElement(2)).value == 166125657057


def test_inverse_of_zero_raises():
    with pytest.raises(ZeroInverse):
        field_inverse(PrimeFieldElement(0))
    with pytest.raises(ZeroInverse):
        PrimeField().inv(MODULUS)


@pytest.mark.parametrize("value", [1, 3, 12345, MODULUS - 1, 2 ** 37 + 11])
def test_inverse_times_value_is_one(value):
    a = PrimeFieldElement(value)
    assert (a * field_inverse(a)).value == 1


def test_elements_are_canonical():
    assert PrimeFieldElement(-1).value == MODULUS - 1
    assert PrimeFieldElement(MODULUS + 5) == PrimeFieldElement(5)


def test_rational_maps_into_zp():
    field = PrimeField()
    assert field.from_number(Fraction(1, 2)) == 166125657057
    assert field.from_number("-3") == MODULUS - 3


def test_grevlex_and_lex_examples():
    grevlex = MonomialOrder()
    lex = MonomialOrder(kind="lex")
    h1h2 = parse_monomial("h1*h2")
    h3_squared = parse_monomial("h3^2")
    h1 = parse_monomial("h1")
    h2_cubed = parse_monomial("h2^3")
    assert monomial_compare(h1h2, h3_squared, grevlex) is Ordering.GREATER
    assert monomial_compare(h1, h2_cubed, grevlex) is Ordering.LESS
    assert monomial_compare(h1, h2_cubed, lex) is Ordering.GREATER
    assert monomial_compare(h1, h1, lex) is Ordering.EQUAL


def test_default_order_ranks_h7_above_h4():
    order = MonomialOrder()
    assert monomial_compare(parse_monomial("h7"), parse_monomial("h4"), order) is Ordering.GREATER
    assert monomial_compare(parse_monomial("h9"), parse_monomial("h4"), order) is Ordering.GREATER
    assert monomial_compare(parse_monomial("h6"), parse_monomial("h10"), order) is Ordering.GREATER


@pytest.mark.parametrize("kind", ["lex", "grevlex"])
def test_orders_are_multiplicative(kind):
    rng = np.random.default_rng(7)
    order = MonomialOrder(kind=kind, variables=tuple(int(v) for v in rng.permutation(10)))
    for _ in range(200):
        a, b, m = (tuple(int(e) for e in rng.integers(0, 3, size=10)) for _ in range(3))
        assert monomial_compare(a, b, order) == monomial_compare(monomial_mul(a, m), monomial_mul(b, m), order)


def test_order_rejects_non_permutation():
    with pytest.raises(ValueError):
        MonomialOrder(variables=(0, 0, 1, 2, 3, 4, 5, 6, 7, 8))


def test_monomial_text_round_trip():
    m = parse_monomial("h5^2*h6*h10")
    assert m == (0, 0, 0, 0, 2, 1, 0, 0, 0, 1)
    assert format_monomial(m) == "h5^2*h6*h10"
    assert parse_monomial("1") == CONSTANT


def test_terms_sorted_without_zeros(zp_ring):
    p = zp_ring.parse("h3 + h1^2 + 5 + h1*h2 - h3")
    assert [format_monomial(m) for m in p.support] == ["h1^2", "h1*h2", "1"]
    assert all(c != 0 for c, _ in p.terms)


def test_addition_cancels_to_zero(zp_ring):
    p = zp_ring.parse("h1*h2 - 3")
    assert (p - p).is_zero
    assert (p + zp_ring.zero) == p


def test_product_of_binomials(zp_ring):
    p = poly_mul(zp_ring.parse("h1 + 1"), zp_ring.parse("h1 - 1"))
    assert p == zp_ring.parse("h1^2 - 1")


def test_mul_term_keeps_order(zp_ring):
    p = zp_ring.parse("h1^2 + h2*h3 + h10")
    q = poly_mul_term(p, 3, parse_monomial("h4"))
    keys = [zp_ring.key(m) for m in q.support]
    assert keys == sorted(keys, reverse=True)
    assert q == zp_ring.parse("3*h1^2*h4 + 3*h2*h3*h4 + 3*h4*h10")


def test_evaluate(zp_ring):
    p = zp_ring.parse("h1*h2 - 2*h10 + 7")
    values = [3, 4, 0, 0, 0, 0, 0, 0, 0, 5]
    assert poly_evaluate(p, values) == 3 * 4 - 10 + 7


def test_monic(zp_ring):
    p = zp_ring.parse("2*h1 + 1").monic()
    assert p.leading_coefficient == 1
    assert p.coefficient(CONSTANT) == 166125657057


def test_mixing_rings_is_rejected(zp_ring):
    other = PolynomialRing(PrimeField(), MonomialOrder(kind="lex"))
    with pytest.raises(ValueError):
        zp_ring.parse("h1") + other.parse("h1")


def test_bigfloat_text_is_bit_exact():
    field = BigFloatField(512)
    x = field.one / 3
    assert field.from_text(field.to_text(x)) == x


def test_bigfloat_zero_division():
    field = BigFloatField(128)
    with pytest.raises(DivisionByZeroCoefficient):
        field.inv(field.zero)


def test_paired_zero_test_uses_zp_side():
    field = PairedField(PrimeField(), BigFloatField(128))
    residue = field.replay.from_number("1e-30")
    assert field.is_zero((0, residue))
    assert not field.is_zero((1, field.replay.zero))
    with pytest.raises(DivisionByZeroCoefficient):
        field.inv((1, field.replay.zero))


def test_paired_monic_scale_leaves_float_side():
    field = PairedField(PrimeField(), BigFloatField(128))
    scale = field.monic_scale((2, field.replay.from_number(2)))
    assert scale == (166125657057, field.replay.one)


def test_system_record_survives_json(zp_ring):
    system = [zp_ring.parse("h1*h2 - 3"), zp_ring.parse("h10^2 + 2*h5 - 1")]
    text = system_to_record(system).model_dump_json()
    restored = system_from_record(PolynomialSystemRecord.model_validate(json.loads(text)))
    assert restored == system


def test_bigfloat_system_record_keeps_precision():
    ring = PolynomialRing(BigFloatField(256))
    p = ring.from_numbers({parse_monomial("h1"): Fraction(1, 3), CONSTANT: Fraction(-2, 7)})
    restored = system_from_record(PolynomialSystemRecord.model_validate_json(system_to_record([p]).model_dump_json()))
    assert restored[0].terms == p.terms
    assert restored[0].ring.field.precision_bits == 256


def test_system_record_with_zero_coefficient_is_rejected(zp_ring):
    data = json.loads(system_to_record([zp_ring.parse("h1*h2 - 3")]).model_dump_json())
    data["polynomials"][0][1][0] = "0"
    with pytest.raises(ValueError, match="zero coefficient"):
        system_from_record(PolynomialSystemRecord.model_validate(data))
